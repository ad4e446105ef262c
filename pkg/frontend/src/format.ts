/** Number display formatting, matching the service convention:
 * round half-up (away from zero) to 2 decimals, strip trailing zeros and a
 * bare decimal point. 84.41 -> "84.41", 85.7 -> "85.7", 2 -> "2".
 *
 * Implemented on the shortest decimal representation so results agree with
 * the server for every double.
 */

export function formatValue(value: number, places = 2): string {
  if (!Number.isFinite(value)) {
    throw new Error(`cannot format non-finite value ${value}`);
  }
  let s = String(value);
  if (s.includes("e") || s.includes("E")) {
    // |value| is far outside measurement range; fall back to a plain expansion
    s = value.toFixed(places + 6);
  }
  const negative = s.startsWith("-");
  if (negative) s = s.slice(1);
  const [intPartRaw, fracRaw = ""] = s.split(".");
  let intDigits = intPartRaw;
  let frac = fracRaw.slice(0, places).padEnd(places, "0");
  const dropped = fracRaw.slice(places);
  if (dropped && dropped[0] >= "5") {
    // decimal increment with carry
    let digits = (intDigits + frac).split("");
    let i = digits.length - 1;
    for (; i >= 0; i--) {
      if (digits[i] === "9") {
        digits[i] = "0";
      } else {
        digits[i] = String(Number(digits[i]) + 1);
        break;
      }
    }
    if (i < 0) digits = ["1", ...digits];
    const joined = digits.join("");
    intDigits = joined.slice(0, joined.length - places);
    frac = joined.slice(joined.length - places);
  }
  let out = frac.length ? `${intDigits || "0"}.${frac}` : intDigits || "0";
  if (out.includes(".")) {
    out = out.replace(/0+$/, "").replace(/\.$/, "");
  }
  if (out === "0" || out === "") return "0";
  return negative ? `-${out}` : out;
}
