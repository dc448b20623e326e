import type { BatchPayload, LabelChoice, ProgressPayload, SubmitResult } from './types.js'

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
  }
}

async function request<T>(url: string, body?: unknown): Promise<T> {
  const response = await fetch(url, body === undefined ? {} : {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
  })
  const payload = await response.json().catch(() => ({}))
  if (!response.ok) {
    throw new ApiError(response.status, (payload as { error?: string }).error ?? response.statusText)
  }
  return payload as T
}

/** Thin typed client over the session endpoints. */
export class ApiClient {
  constructor(readonly base: string = '') {}

  createSession(config: Record<string, unknown>, sessionId?: string): Promise<{ session_id: string }> {
    return request(`${this.base}/session`, sessionId ? { config, session_id: sessionId } : { config })
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return request(`${this.base}/session`)
  }

  getBatch(sessionId: string): Promise<BatchPayload> {
    return request(`${this.base}/session/${sessionId}/batch`)
  }

  submitLabels(sessionId: string, labels: Record<string, LabelChoice>): Promise<SubmitResult> {
    return request(`${this.base}/session/${sessionId}/labels`, { labels })
  }

  getProgress(sessionId: string): Promise<ProgressPayload> {
    return request(`${this.base}/session/${sessionId}/progress`)
  }
}
