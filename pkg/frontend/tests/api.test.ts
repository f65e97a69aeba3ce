import { describe, expect, it } from 'vitest';

import { ApiError, ReviewClient } from '../src/api';
import { FakeReviewServer } from './fake_server';

function makeClient(server: FakeReviewServer): ReviewClient {
  return new ReviewClient('', server.fetch);
}

describe('ReviewClient', () => {
  it('fetches the next card for a known annotator', async () => {
    const server = FakeReviewServer.withCards(3, ['A']);
    const next = await makeClient(server).next('A');
    expect(next.done).toBe(false);
    expect(next.card?.sample_id).toBe('s000000');
    expect(next.card?.answers).toHaveLength(5);
  });

  it('raises a typed 403 for unknown annotators', async () => {
    const server = FakeReviewServer.withCards(3, ['A']);
    const error = await makeClient(server).next('Z').catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(403);
    expect(error.code).toBe('unknown_annotator');
  });

  it('posts ratings and reports overwrites', async () => {
    const server = FakeReviewServer.withCards(1, ['A']);
    const client = makeClient(server);
    const payload = {
      annotator_id: 'A',
      sample_id: 's000000',
      criterion: 'fluency' as const,
      rating: 3 as const,
    };
    expect((await client.submitRating(payload)).overwrote).toBe(false);
    expect((await client.submitRating({ ...payload, rating: 5 })).overwrote).toBe(true);
    expect(server.auditCount).toBe(1);
  });

  it('rejects a bad criterion with a 400', async () => {
    const server = FakeReviewServer.withCards(1, ['A']);
    const error = await makeClient(server)
      .submitRating({
        annotator_id: 'A',
        sample_id: 's000000',
        // @ts-expect-error deliberately invalid criterion
        criterion: 'elegance',
        rating: 3,
      })
      .catch((e) => e);
    expect(error.status).toBe(400);
    expect(error.code).toBe('bad_criterion');
  });

  it('surfaces transport-level failures', async () => {
    const server = FakeReviewServer.withCards(1, ['A']);
    server.failNextPosts = 1;
    const error = await makeClient(server)
      .submitRating({
        annotator_id: 'A',
        sample_id: 's000000',
        criterion: 'fluency',
        rating: 3,
      })
      .catch((e) => e);
    expect(error.status).toBe(500);
  });

  it('reads progress and stats', async () => {
    const server = FakeReviewServer.withCards(4, ['A', 'B']);
    const client = makeClient(server);
    const progress = await client.progress();
    expect(progress.subset_size).toBe(4);
    expect(Object.keys(progress.per_annotator).sort()).toEqual(['A', 'B']);
    expect(await client.stats()).toEqual({ samples: 4 });
  });
});
