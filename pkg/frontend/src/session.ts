import type { ApiClient } from './api.js'
import type { BatchPayload, BatchSample, LabelChoice, ProgressPayload } from './types.js'

export type Phase =
  | 'loading'
  | 'annotating'
  | 'cycle-complete'
  | 'session-complete'
  | 'error'

export interface SessionView {
  phase: Phase
  sample: BatchSample | null
  answered: number
  total: number
  cycle: number
  classNames: string[]
  progress: ProgressPayload | null
  notice: string | null
  networkError: string | null
  bufferedCount: number
}

interface QueueEntry {
  id: number | string
  choice: LabelChoice
}

/**
 * One-sample-at-a-time annotation over a pending batch.
 *
 * Choices advance the UI optimistically and land in a submission buffer
 * that flushes to the server in order, one label per request. A per-id
 * rejection rolls only that sample back to pending; a network failure
 * pauses the flush with the buffer intact until retry(). All state is
 * refetched from the server on load, so a reload resumes exactly where the
 * server says the batch is.
 */
export class SessionController {
  private batch: BatchPayload | null = null
  private progress: ProgressPayload | null = null
  private queue: QueueEntry[] = []
  private flushing = false
  private phase: Phase = 'loading'
  private notice: string | null = null
  private networkError: string | null = null
  private listeners: Array<(view: SessionView) => void> = []

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  onChange(listener: (view: SessionView) => void): void {
    this.listeners.push(listener)
  }

  private emit(): void {
    const view = this.view()
    for (const listener of this.listeners) listener(view)
  }

  /** Fetch batch + progress from the server; safe to call again anytime. */
  async load(): Promise<void> {
    this.phase = 'loading'
    this.queue = []
    this.notice = null
    this.networkError = null
    this.emit()
    try {
      this.progress = await this.api.getProgress(this.sessionId)
      if (this.progress.labeled >= this.progress.budget || this.progress.pool === 0) {
        this.batch = null
        this.phase = 'session-complete'
      } else {
        this.batch = await this.api.getBatch(this.sessionId)
        this.phase = this.pendingSamples().length > 0 ? 'annotating' : 'cycle-complete'
      }
    } catch (err) {
      this.networkError = err instanceof Error ? err.message : String(err)
      this.phase = 'error'
    }
    this.emit()
  }

  private pendingSamples(): BatchSample[] {
    if (!this.batch) return []
    const queued = new Set(this.queue.map((entry) => String(entry.id)))
    return this.batch.samples.filter(
      (sample) => sample.status === 'pending' && !queued.has(String(sample.id)),
    )
  }

  current(): BatchSample | null {
    return this.pendingSamples()[0] ?? null
  }

  view(): SessionView {
    const total = this.batch?.samples.length ?? 0
    return {
      phase: this.phase,
      sample: this.phase === 'annotating' ? this.current() : null,
      answered: total - this.pendingSamples().length,
      total,
      cycle: this.batch?.cycle ?? this.progress?.cycle ?? 0,
      classNames: this.batch?.class_names ?? [],
      progress: this.progress,
      notice: this.notice,
      networkError: this.networkError,
      bufferedCount: this.queue.length,
    }
  }

  /** Label the current sample (0-based class index). */
  async choose(classIndex: number): Promise<void> {
    await this.answer(classIndex)
  }

  /** Send the current sample back to the pool for this cycle. */
  async skip(): Promise<void> {
    await this.answer('skip')
  }

  private async answer(choice: LabelChoice): Promise<void> {
    const sample = this.current()
    if (!sample || this.phase !== 'annotating') return
    this.queue.push({ id: sample.id, choice })
    this.notice = null
    this.emit()
    await this.flush()
  }

  /** Re-attempt a flush after a network failure; the buffer is intact. */
  async retry(): Promise<void> {
    this.networkError = null
    if (this.phase === 'error') this.phase = 'annotating'
    this.emit()
    await this.flush()
  }

  private async flush(): Promise<void> {
    if (this.flushing) return
    this.flushing = true
    try {
      while (this.queue.length > 0) {
        const entry = this.queue[0]!
        let result
        try {
          result = await this.api.submitLabels(this.sessionId, { [String(entry.id)]: entry.choice })
        } catch (err) {
          this.networkError = err instanceof Error ? err.message : String(err)
          this.emit()
          return
        }
        this.queue.shift()
        this.applyResult(entry, result)
        this.emit()
      }
    } finally {
      this.flushing = false
    }
  }

  private applyResult(
    entry: QueueEntry,
    result: {
      accepted: string[]
      rejected: Record<string, string>
      batch_complete: boolean
      labeled: number
      next_batch_available: boolean
    },
  ): void {
    const sample = this.batch?.samples.find((s) => String(s.id) === String(entry.id))
    const reason = result.rejected[String(entry.id)]
    if (reason !== undefined) {
      // rollback: only this sample is re-presented
      this.notice = `sample ${entry.id} rejected: ${reason}`
      if (sample) sample.status = 'pending'
    } else if (sample) {
      sample.status = entry.choice === 'skip' ? 'skipped' : 'labeled'
    }
    if (this.progress) this.progress.labeled = result.labeled
    if (result.batch_complete) {
      this.phase = result.next_batch_available ? 'cycle-complete' : 'session-complete'
    }
  }

  /** Move on to the next batch after a completed cycle. */
  async nextBatch(): Promise<void> {
    await this.load()
  }
}
