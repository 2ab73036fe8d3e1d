/**
 * Page flow: upload a trace, watch the diagnosis arrive, then chat about it.
 *
 * Answers are polled, not streamed: after a question is posted the client
 * re-reads the message history every second until the answer shows up. Only
 * one question may be in flight per session; the send button stays disabled
 * until the answer lands.
 */

import {
  ApiError,
  Message,
  SessionView,
  createSession,
  getMessages,
  getSession,
  postQuestion,
} from './api.js';
import {
  renderDiagnosis,
  renderError,
  renderHistory,
  renderSpinner,
} from './views.js';

export const POLL_INTERVAL_MS = 1000;

export type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Poll the session history every `intervalMs` until it has at least
 * `minLength` messages (or attempts run out, returning the last snapshot).
 */
export async function pollHistory(
  sessionId: string,
  minLength: number,
  intervalMs: number = POLL_INTERVAL_MS,
  sleep: Sleep = realSleep,
  maxAttempts = 600,
): Promise<Message[]> {
  let snapshot: Message[] = [];
  for (let attempt = 0; attempt < maxAttempts; attempt += 1) {
    snapshot = (await getMessages(sessionId)).messages;
    if (snapshot.length >= minLength) {
      return snapshot;
    }
    await sleep(intervalMs);
  }
  return snapshot;
}

/**
 * Post a question and resolve with the full history once the answer is
 * visible. The post itself and the polling loop run concurrently so a
 * service restart mid-call still converges on the persisted history.
 */
export async function askAndWait(
  sessionId: string,
  question: string,
  sleep: Sleep = realSleep,
): Promise<Message[]> {
  const before = (await getMessages(sessionId)).messages.length;
  await postQuestion(sessionId, question);
  return pollHistory(sessionId, before + 2, POLL_INTERVAL_MS, sleep);
}

function describeError(err: unknown): { message: string; line?: number | null } {
  if (err && typeof err === 'object' && 'message' in err) {
    const apiErr = err as ApiError;
    return { message: String(apiErr.message), line: apiErr.line };
  }
  return { message: 'network failure - is the service running?' };
}

export class App {
  private session: SessionView | null = null;

  private pending = false;

  constructor(private root: HTMLElement) {}

  start(): void {
    this.renderUpload();
  }

  private el<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (!node) {
      throw new Error(`missing element ${selector}`);
    }
    return node as T;
  }

  private renderUpload(error?: string): void {
    this.root.innerHTML = `
<section class="upload">
  <h1>I/O trace diagnosis</h1>
  <p>Paste or choose the text output of <code>darshan-parser</code>.</p>
  <input type="file" id="trace-file" />
  <textarea id="trace-text" rows="8" placeholder="# darshan log version: ..."></textarea>
  <button id="analyze" type="button">Analyze trace</button>
  <div id="upload-status">${error ?? ''}</div>
</section>`;
    this.el<HTMLInputElement>('#trace-file').addEventListener('change', async (event) => {
      const input = event.target as HTMLInputElement;
      const file = input.files?.[0];
      if (file) {
        this.el<HTMLTextAreaElement>('#trace-text').value = await file.text();
      }
    });
    this.el<HTMLButtonElement>('#analyze').addEventListener('click', () => {
      void this.analyze();
    });
  }

  private async analyze(): Promise<void> {
    const text = this.el<HTMLTextAreaElement>('#trace-text').value;
    if (!text.trim()) {
      this.el('#upload-status').innerHTML = renderError('paste a trace first');
      this.wireRetry(() => this.renderUpload());
      return;
    }
    this.el('#upload-status').innerHTML = renderSpinner('diagnosing trace...');
    try {
      this.session = await createSession(text);
    } catch (err) {
      const { message, line } = describeError(err);
      this.el('#upload-status').innerHTML = renderError(message, line);
      this.wireRetry(() => void this.analyze());
      return;
    }
    await this.renderSession();
  }

  async openSession(sessionId: string): Promise<void> {
    this.session = await getSession(sessionId);
    await this.renderSession();
  }

  private async renderSession(): Promise<void> {
    if (!this.session) {
      return;
    }
    const { messages } = await getMessages(this.session.session_id);
    this.root.innerHTML = `
${renderDiagnosis(this.session)}
<section class="chat">
  <h2>Follow-up</h2>
  <div id="history">${renderHistory(messages.slice(1))}</div>
  <div id="chat-status"></div>
  <form id="ask-form">
    <input id="question" type="text" placeholder="How do I fix this?" autocomplete="off" />
    <button id="send" type="submit">Send</button>
  </form>
</section>`;
    this.el<HTMLFormElement>('#ask-form').addEventListener('submit', (event) => {
      event.preventDefault();
      void this.ask();
    });
  }

  private async ask(): Promise<void> {
    if (!this.session || this.pending) {
      return;
    }
    const input = this.el<HTMLInputElement>('#question');
    const question = input.value.trim();
    if (!question) {
      return;
    }
    this.pending = true;
    const send = this.el<HTMLButtonElement>('#send');
    send.disabled = true;
    this.el('#chat-status').innerHTML = renderSpinner('waiting for answer...');
    try {
      const history = await askAndWait(this.session.session_id, question);
      this.el('#history').innerHTML = renderHistory(history.slice(1));
      this.el('#chat-status').innerHTML = '';
      input.value = '';
    } catch (err) {
      const { message } = describeError(err);
      this.el('#chat-status').innerHTML = renderError(message);
      this.wireRetry(() => void this.ask());
    } finally {
      this.pending = false;
      send.disabled = false;
    }
  }

  private wireRetry(action: () => void): void {
    const retry = this.root.querySelector('button.retry');
    retry?.addEventListener('click', action, { once: true });
  }
}

const mount = typeof document !== 'undefined' ? document.getElementById('app') : null;
if (mount) {
  new App(mount).start();
}
