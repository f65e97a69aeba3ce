import type { CardForm } from './state';
import type { Criterion, Rating } from './types';

export type KeyAction =
  | { kind: 'rate'; criterion: Criterion; rating: Rating }
  | { kind: 'move'; delta: number }
  | { kind: 'submit' }
  | { kind: 'none' };

/**
 * Keyboard shortcuts: 1-5 rate the active criterion, `x` marks it
 * "cannot judge", arrows/tab move between criteria, Enter submits once the
 * form is complete.
 */
export function interpretKey(key: string, form: CardForm | null): KeyAction {
  if (form === null) return { kind: 'none' };
  if (key >= '1' && key <= '5') {
    const rating = Number(key) as Rating;
    return { kind: 'rate', criterion: form.activeCriterion, rating };
  }
  switch (key) {
    case 'x':
    case 'X':
      return { kind: 'rate', criterion: form.activeCriterion, rating: null };
    case 'ArrowDown':
    case 'Tab':
      return { kind: 'move', delta: 1 };
    case 'ArrowUp':
      return { kind: 'move', delta: -1 };
    case 'Enter':
      return form.canSubmit ? { kind: 'submit' } : { kind: 'none' };
    default:
      return { kind: 'none' };
  }
}

/** Apply an action to the form; returns true when the caller should submit. */
export function applyAction(action: KeyAction, form: CardForm): boolean {
  switch (action.kind) {
    case 'rate':
      form.setRating(action.criterion, action.rating);
      // auto-advance so an annotator can type 4, 4, 5, Enter
      form.moveActive(1);
      return false;
    case 'move':
      form.moveActive(action.delta);
      return false;
    case 'submit':
      return true;
    case 'none':
      return false;
  }
}
