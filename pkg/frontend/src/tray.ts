/** Pure models for the two answer screens.
 *
 * A ranking round is a tray the operator drops cards into: tray order is
 * the submission, cards left outside are unranked, and any k from 1 to m
 * is a valid answer. A selection round is a single pick. All operations
 * return new states and ignore ids they do not recognize, so a stray event
 * can never corrupt an answer.
 */

export interface TrayState {
  /** Ids in display order; fixed for the lifetime of the batch view. */
  readonly display: readonly string[];
  /** Ids the operator has ranked, best first. */
  readonly ranked: readonly string[];
}

export function createTray(display: readonly string[]): TrayState {
  return { display: [...display], ranked: [] };
}

/** Cards not yet ranked, in display order. */
export function unrankedCards(state: TrayState): string[] {
  const taken = new Set(state.ranked);
  return state.display.filter((id) => !taken.has(id));
}

/** Append a card to the tray. Unknown or already-ranked ids are ignored. */
export function rankCard(state: TrayState, id: string): TrayState {
  if (!state.display.includes(id) || state.ranked.includes(id)) {
    return state;
  }
  return { display: state.display, ranked: [...state.ranked, id] };
}

/** Return a card to the unranked pool. */
export function unrankCard(state: TrayState, id: string): TrayState {
  if (!state.ranked.includes(id)) {
    return state;
  }
  return { display: state.display, ranked: state.ranked.filter((r) => r !== id) };
}

export function moveEarlier(state: TrayState, id: string): TrayState {
  return swapWithNeighbor(state, id, -1);
}

export function moveLater(state: TrayState, id: string): TrayState {
  return swapWithNeighbor(state, id, +1);
}

function swapWithNeighbor(state: TrayState, id: string, offset: -1 | 1): TrayState {
  const at = state.ranked.indexOf(id);
  const other = at + offset;
  if (at < 0 || other < 0 || other >= state.ranked.length) {
    return state;
  }
  const ranked = [...state.ranked];
  ranked[at] = state.ranked[other] as string;
  ranked[other] = id;
  return { display: state.display, ranked };
}

/** The answer to post: the operator's order, never the display order. */
export function rankingSubmission(state: TrayState): string[] {
  return [...state.ranked];
}

export interface PickState {
  readonly display: readonly string[];
  readonly selected: string | null;
}

export function createPick(display: readonly string[]): PickState {
  return { display: [...display], selected: null };
}

/** Choose a card; choosing it again clears the choice. Unknown ids are ignored. */
export function pickCard(state: PickState, id: string): PickState {
  if (!state.display.includes(id)) {
    return state;
  }
  return { display: state.display, selected: state.selected === id ? null : id };
}

export function canSubmitPick(state: PickState): boolean {
  return state.selected !== null;
}
