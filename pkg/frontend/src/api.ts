/**
 * Typed client for the session service. Every request funnels through one
 * helper that records the (method, path) it touched, so tests can assert the
 * UI never calls an endpoint the service does not declare.
 */

export interface Reference {
  key: string;
  citation: string;
  text: string;
}

export interface SessionView {
  session_id: string;
  trace_ref: string;
  created_at: number;
  diagnosis: string;
  references: Reference[];
  issue_tags: string[];
  origin: [string, string][];
}

export interface Message {
  role: string;
  text: string;
  timestamp: number;
}

export interface ApiError {
  status: number;
  type: string;
  message: string;
  line?: number | null;
}

/** The endpoints the service declares; nothing else may be requested. */
export const DECLARED_ENDPOINTS: ReadonlyArray<{ method: string; pattern: RegExp }> = [
  { method: 'GET', pattern: /^\/api\/health$/ },
  { method: 'POST', pattern: /^\/api\/sessions$/ },
  { method: 'GET', pattern: /^\/api\/sessions\/[^/]+$/ },
  { method: 'POST', pattern: /^\/api\/sessions\/[^/]+\/messages$/ },
  { method: 'GET', pattern: /^\/api\/sessions\/[^/]+\/messages$/ },
];

export interface RequestLogEntry {
  method: string;
  path: string;
}

export const requestLog: RequestLogEntry[] = [];

export function isDeclared(method: string, path: string): boolean {
  return DECLARED_ENDPOINTS.some(
    (e) => e.method === method && e.pattern.test(path),
  );
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  if (!isDeclared(method, path)) {
    throw new Error(`undeclared endpoint: ${method} ${path}`);
  }
  requestLog.push({ method, path });
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { 'Content-Type': 'application/json' };
    init.body = JSON.stringify(body);
  }
  const resp = await fetch(path, init);
  const payload = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const error = (payload as { error?: { type?: string; message?: string; line?: number } }).error ?? {};
    const apiError: ApiError = {
      status: resp.status,
      type: error.type ?? 'unknown',
      message: error.message ?? `request failed with status ${resp.status}`,
      line: error.line ?? null,
    };
    throw apiError;
  }
  return payload as T;
}

export function createSession(traceText: string): Promise<SessionView> {
  return request<SessionView>('POST', '/api/sessions', { trace_text: traceText });
}

export function getSession(sessionId: string): Promise<SessionView> {
  return request<SessionView>('GET', `/api/sessions/${sessionId}`);
}

export function postQuestion(
  sessionId: string,
  question: string,
): Promise<{ answer: string; history_length: number }> {
  return request('POST', `/api/sessions/${sessionId}/messages`, { question });
}

export function getMessages(sessionId: string): Promise<{ messages: Message[] }> {
  return request('GET', `/api/sessions/${sessionId}/messages`);
}

export function checkHealth(): Promise<{ status: string }> {
  return request('GET', '/api/health');
}
