/** Numeric cells display a fixed-precision rendering of the exact server
 * value and carry that exact value in data-value, so fidelity tests can
 * compare both the text and the raw field. */

export function numericCell(
  doc: Document, value: number | null, digits = 3
): HTMLTableCellElement {
  const td = doc.createElement("td");
  if (value === null) {
    td.textContent = "-";
  } else {
    td.textContent = value.toFixed(digits);
    td.dataset.value = String(value);
  }
  return td;
}

export function textCell(doc: Document, text: string): HTMLTableCellElement {
  const td = doc.createElement("td");
  td.textContent = text;
  return td;
}
