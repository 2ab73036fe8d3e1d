import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import {
  DECLARED_ENDPOINTS,
  createSession,
  getMessages,
  getSession,
  isDeclared,
  postQuestion,
  requestLog,
} from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

const sessionPayload = {
  session_id: 'abc',
  trace_ref: 't',
  created_at: 0,
  diagnosis: 'd',
  references: [],
  issue_tags: [],
  origin: [],
};

beforeEach(() => {
  requestLog.length = 0;
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('isDeclared', () => {
  it('accepts every declared endpoint shape', () => {
    expect(isDeclared('POST', '/api/sessions')).toBe(true);
    expect(isDeclared('GET', '/api/sessions/x1')).toBe(true);
    expect(isDeclared('POST', '/api/sessions/x1/messages')).toBe(true);
    expect(isDeclared('GET', '/api/sessions/x1/messages')).toBe(true);
    expect(isDeclared('GET', '/api/health')).toBe(true);
  });

  it('rejects anything else', () => {
    expect(isDeclared('DELETE', '/api/sessions/x1')).toBe(false);
    expect(isDeclared('GET', '/api/admin')).toBe(false);
    expect(isDeclared('POST', '/api/sessions/x1/labels')).toBe(false);
  });
});

describe('request plumbing', () => {
  it('logs every request it makes', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => jsonResponse(sessionPayload)));
    await createSession('# nprocs: 1');
    await getSession('abc');
    expect(requestLog).toEqual([
      { method: 'POST', path: '/api/sessions' },
      { method: 'GET', path: '/api/sessions/abc' },
    ]);
  });

  it('shapes API errors with type, message, and line', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () =>
        jsonResponse(
          { error: { type: 'malformed_trace', message: 'bad line', line: 12 } },
          422,
        ),
      ),
    );
    await expect(createSession('x')).rejects.toMatchObject({
      status: 422,
      type: 'malformed_trace',
      line: 12,
    });
  });

  it('sends the question as JSON', async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ answer: 'a', history_length: 3 }));
    vi.stubGlobal('fetch', fetchMock);
    await postQuestion('abc', 'why slow?');
    const [path, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(path).toBe('/api/sessions/abc/messages');
    expect(JSON.parse(String(init.body))).toEqual({ question: 'why slow?' });
  });

  it('parses message history', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () => jsonResponse({ messages: [{ role: 'assistant', text: 'd', timestamp: 1 }] })),
    );
    const { messages } = await getMessages('abc');
    expect(messages).toHaveLength(1);
  });

  it('declares exactly five endpoints', () => {
    expect(DECLARED_ENDPOINTS).toHaveLength(5);
  });
});
