import type { ReviewClient } from './api';
import type {
  Criterion,
  Rating,
  RatingPayload,
  ReviewCard,
} from './types';
import { REVIEW_CRITERIA } from './types';

/**
 * Rating form for one card. Submit is gated: every criterion must carry an
 * explicit value first, where "cannot judge" (null) is a deliberate choice
 * and counts, but an untouched criterion does not.
 */
export class CardForm {
  private readonly ratings = new Map<Criterion, Rating>();
  activeIndex = 0;

  constructor(readonly card: ReviewCard) {}

  setRating(criterion: Criterion, rating: Rating): void {
    this.ratings.set(criterion, rating);
  }

  getRating(criterion: Criterion): Rating | undefined {
    return this.ratings.get(criterion);
  }

  get activeCriterion(): Criterion {
    return REVIEW_CRITERIA[this.activeIndex];
  }

  moveActive(delta: number): void {
    const n = REVIEW_CRITERIA.length;
    this.activeIndex = (this.activeIndex + delta + n) % n;
  }

  get ratedCount(): number {
    return this.ratings.size;
  }

  get canSubmit(): boolean {
    return REVIEW_CRITERIA.every((c) => this.ratings.has(c));
  }

  payloads(annotatorId: string): RatingPayload[] {
    if (!this.canSubmit) {
      throw new Error('form incomplete: rate all criteria first');
    }
    return REVIEW_CRITERIA.map((criterion) => ({
      annotator_id: annotatorId,
      sample_id: this.card.sample_id,
      criterion,
      rating: this.ratings.get(criterion) as Rating,
    }));
  }
}

export type SessionStatus = 'idle' | 'rating' | 'submitting' | 'done';

/** Drives one annotator's pass over the review subset. */
export class ReviewSession {
  form: CardForm | null = null;
  status: SessionStatus = 'idle';
  submittedCards = 0;

  constructor(
    private readonly client: ReviewClient,
    readonly annotatorId: string,
  ) {}

  async loadNext(): Promise<CardForm | null> {
    const next = await this.client.next(this.annotatorId);
    if (next.done || next.card === null) {
      this.form = null;
      this.status = 'done';
      return null;
    }
    this.form = new CardForm(next.card);
    this.status = 'rating';
    return this.form;
  }

  /**
   * Post all three ratings, then advance. On a failed post the form is kept
   * so the annotator can retry; already-posted criteria are simply
   * overwritten on retry (the server treats that as an idempotent update).
   */
  async submit(): Promise<void> {
    if (this.form === null || !this.form.canSubmit) {
      throw new Error('nothing to submit');
    }
    this.status = 'submitting';
    try {
      for (const payload of this.form.payloads(this.annotatorId)) {
        await this.client.submitRating(payload);
      }
    } catch (error) {
      this.status = 'rating';
      throw error;
    }
    this.submittedCards += 1;
    await this.loadNext();
  }
}
