/** HUD model: everything shown is derived from the latest snapshot only. */
import type { Snapshot } from "./protocol.js";

export interface HudModel {
  timerText: string;
  timerColor: string;
  scoreText: string;
  phaseText: string;
  trialOver: boolean;
}

export const TIMER_COLORS: Record<Snapshot["timer"], string> = {
  white: "#ffffff",
  yellow: "#ffd400",
  red: "#ff3b30",
  expired: "#ff3b30",
};

export function formatClock(elapsed: number): string {
  const total = Math.floor(elapsed);
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return `${minutes}:${seconds.toString().padStart(2, "0")}`;
}

export function hudModel(snap: Snapshot): HudModel {
  return {
    timerText: formatClock(snap.elapsed),
    timerColor: TIMER_COLORS[snap.timer],
    scoreText: `${Math.round(snap.score)}`,
    phaseText: snap.phase,
    trialOver: snap.phase === "Docked" || snap.phase === "TimedOut"
      || snap.timer === "expired",
  };
}

/** Bind the model onto the fixed HUD elements (timer top-left, score
 * top-right, phase underneath). */
export function renderHud(model: HudModel, els: {
  timer: HTMLElement; score: HTMLElement; phase: HTMLElement;
  modal?: HTMLElement;
}): void {
  els.timer.textContent = model.timerText;
  els.timer.style.color = model.timerColor;
  els.score.textContent = model.scoreText;
  els.phase.textContent = model.phaseText;
  if (els.modal) {
    els.modal.style.display = model.trialOver ? "flex" : "none";
  }
}
