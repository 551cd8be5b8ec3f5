/** Four-viewport layout with exactly one selected (blue-framed) view. */

export const VIEWPORT_COUNT = 4;
export const HIGHLIGHT_STYLE = "3px solid #2f7bff";

export interface ViewportLayout {
  selected: number;
}

export function initialLayout(selected = 0): ViewportLayout {
  if (selected < 0 || selected >= VIEWPORT_COUNT) {
    throw new Error(`selected viewport ${selected} out of range`);
  }
  return { selected };
}

/** Snapshot is the sole source of truth for which camera is live. */
export function applySelection(layout: ViewportLayout, selected: number): ViewportLayout {
  if (selected < 0 || selected >= VIEWPORT_COUNT) {
    throw new Error(`selected viewport ${selected} out of range`);
  }
  return { selected };
}

export function frameStyles(layout: ViewportLayout): string[] {
  return Array.from({ length: VIEWPORT_COUNT }, (_, i) =>
    i === layout.selected ? HIGHLIGHT_STYLE : "1px solid #333");
}
