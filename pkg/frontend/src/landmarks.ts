/** Landmark palette: ids the service accepts, with display labels. */

export interface LandmarkInfo {
  id: string;
  label: string;
  soft?: boolean;
}

export const LANDMARKS: LandmarkInfo[] = [
  { id: "S", label: "sella" },
  { id: "N", label: "nasion" },
  { id: "Or", label: "orbitale" },
  { id: "Po", label: "porion" },
  { id: "A", label: "A point (subspinale)" },
  { id: "B", label: "B point (supramentale)" },
  { id: "Pog", label: "pogonion" },
  { id: "Gn", label: "gnathion" },
  { id: "Me", label: "menton" },
  { id: "Go", label: "gonion" },
  { id: "D", label: "D point (symphysis center)" },
  { id: "U1E", label: "upper incisor edge" },
  { id: "U1A", label: "upper incisor apex" },
  { id: "L1E", label: "lower incisor edge" },
  { id: "L1A", label: "lower incisor apex" },
  { id: "OcA", label: "anterior occlusal point" },
  { id: "OcP", label: "posterior occlusal point" },
  { id: "ANS", label: "anterior nasal spine" },
  { id: "PNS", label: "posterior nasal spine" },
  { id: "Ar", label: "articulare" },
  { id: "UL", label: "upper lip", soft: true },
  { id: "LL", label: "lower lip", soft: true },
  { id: "Sn", label: "subnasale", soft: true },
  { id: "SPog", label: "soft-tissue pogonion", soft: true },
];

export const LANDMARK_IDS = new Set(LANDMARKS.map((l) => l.id));
