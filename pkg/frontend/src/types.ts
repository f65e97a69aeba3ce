// Shared types mirroring the review API's JSON shapes.

export const REVIEW_CRITERIA = [
  'fluency',
  'semantic_correctness',
  'level_appropriateness',
] as const;

export type Criterion = (typeof REVIEW_CRITERIA)[number];

/** 1-5 star value; null means the annotator cannot judge this criterion. */
export type Rating = 1 | 2 | 3 | 4 | 5 | null;

export interface ReviewCard {
  sample_id: string;
  image_uri: string;
  question: string;
  answers: string[];
  level: number;
  category: string;
}

export interface NextResponse {
  done: boolean;
  card: ReviewCard | null;
  rated_criteria?: number;
}

export interface RatingPayload {
  annotator_id: string;
  sample_id: string;
  criterion: Criterion;
  rating: Rating;
}

export interface RatingResponse {
  stored: boolean;
  overwrote: boolean;
}

export interface AnnotatorProgress {
  completed_samples: number;
  ratings: number;
}

export interface ProgressResponse {
  subset_size: number;
  per_annotator: Record<string, AnnotatorProgress>;
}

/** Krippendorff's ordinal alpha per criterion; null until computable. */
export type AgreementResponse = Record<Criterion, number | null>;
