/** Measurement panel model: a pure projection of the latest service response. */

import { formatValue } from "./format.js";
import type { AnalysisResponse, MeasurementRow, PanelModel } from "./types.js";

export function buildPanelModel(response: AnalysisResponse, report: string): PanelModel {
  const grades = new Map(response.deviations.map((d) => [d.id, d]));
  const rows: MeasurementRow[] = response.measurements.map((m) => {
    const deviation = grades.get(m.id);
    return {
      id: m.id,
      value: formatValue(m.value),
      unit: m.unit,
      grade: deviation ? deviation.grade : null,
      band: deviation ? `${deviation.grade} (z=${formatValue(deviation.z)})` : "ungraded",
    };
  });
  return {
    analysisId: response.id,
    rows,
    sagittal: response.classification.sagittal,
    vertical: response.classification.vertical,
    report,
    skipped: response.skipped.map((s) => `${s.id}: ${s.code}`),
  };
}
