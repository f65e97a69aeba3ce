import { ApiError, ReviewClient } from './api';
import { applyAction, interpretKey } from './keyboard';
import { ReviewSession } from './state';
import { REVIEW_CRITERIA } from './types';
import type { Criterion, Rating } from './types';

const POLL_INTERVAL_MS = 5000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function ratingLabel(rating: Rating | undefined): string {
  if (rating === undefined) return '·';
  return rating === null ? 'n/a' : String(rating);
}

export function startApp(): void {
  const client = new ReviewClient('');
  const annotatorId = new URLSearchParams(location.search).get('annotator') ?? '';
  const session = new ReviewSession(client, annotatorId);

  const question = el<HTMLElement>('question');
  const answers = el<HTMLUListElement>('answers');
  const image = el<HTMLImageElement>('image');
  const meta = el<HTMLElement>('meta');
  const criteriaBox = el<HTMLElement>('criteria');
  const submitBtn = el<HTMLButtonElement>('submit');
  const statusLine = el<HTMLElement>('status');
  const progressBox = el<HTMLElement>('progress');
  const agreementBox = el<HTMLElement>('agreement');

  function renderForm(): void {
    const form = session.form;
    if (form === null) {
      question.textContent = 'All assigned samples reviewed. Thank you!';
      answers.replaceChildren();
      criteriaBox.replaceChildren();
      submitBtn.disabled = true;
      return;
    }
    question.textContent = form.card.question;
    image.src = form.card.image_uri;
    meta.textContent = `${form.card.category} / level ${form.card.level}`;
    answers.replaceChildren(
      ...form.card.answers.map((a) => {
        const li = document.createElement('li');
        li.textContent = a;
        return li;
      }),
    );
    criteriaBox.replaceChildren(
      ...REVIEW_CRITERIA.map((criterion, i) => {
        const row = document.createElement('div');
        row.className = i === form.activeIndex ? 'criterion active' : 'criterion';
        row.textContent = `${criterion}: ${ratingLabel(form.getRating(criterion))}`;
        row.onclick = () => {
          form.activeIndex = i;
          renderForm();
        };
        return row;
      }),
    );
    submitBtn.disabled = !form.canSubmit;
  }

  async function refreshPanels(): Promise<void> {
    try {
      const [progress, agreement] = await Promise.all([
        client.progress(),
        client.agreement(),
      ]);
      progressBox.textContent = Object.entries(progress.per_annotator)
        .map(([who, p]) => `${who}: ${p.completed_samples}/${progress.subset_size}`)
        .join('  ');
      agreementBox.textContent = (Object.keys(agreement) as Criterion[])
        .map((c) => `${c}: ${agreement[c] === null ? '—' : agreement[c]!.toFixed(2)}`)
        .join('  ');
    } catch {
      // panels are advisory; keep the last rendered values on a failed poll
    }
  }

  async function submit(): Promise<void> {
    try {
      await session.submit();
      statusLine.textContent = `submitted ${session.submittedCards} samples`;
      await refreshPanels();
    } catch (error) {
      statusLine.textContent =
        error instanceof ApiError ? `error: ${error.message}` : 'network error, retry';
    }
    renderForm();
  }

  document.addEventListener('keydown', (event) => {
    const action = interpretKey(event.key, session.form);
    if (action.kind === 'none') return;
    event.preventDefault();
    if (session.form && applyAction(action, session.form)) void submit();
    renderForm();
  });
  submitBtn.onclick = () => void submit();

  void (async () => {
    try {
      await session.loadNext();
    } catch (error) {
      statusLine.textContent =
        error instanceof ApiError && error.status === 403
          ? `unknown annotator "${annotatorId}" (use ?annotator=ID)`
          : 'failed to reach the review API';
    }
    renderForm();
    await refreshPanels();
    setInterval(() => void refreshPanels(), POLL_INTERVAL_MS);
  })();
}

if (typeof document !== 'undefined' && document.getElementById('question')) {
  startApp();
}
