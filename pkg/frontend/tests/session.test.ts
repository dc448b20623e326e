import { describe, expect, it } from 'vitest'

import { SessionController } from '../src/session.js'
import type { BatchPayload, LabelChoice, ProgressPayload, SubmitResult } from '../src/types.js'

function batchOf(n: number): BatchPayload {
  return {
    batch_id: 'b0000',
    cycle: 0,
    num_classes: 2,
    class_names: ['benign', 'abusive'],
    samples: Array.from({ length: n }, (_, i) => ({
      id: i,
      text: `sample ${i}`,
      status: 'pending' as const,
    })),
  }
}

function progressOf(labeled: number): ProgressPayload {
  return { labeled, budget: 100, cycle: 0, pool: 50, strategy: 'nds', alpha: null }
}

/** In-memory stand-in for the service with scriptable behavior. */
class FakeApi {
  batch = batchOf(5)
  progress = progressOf(10)
  posts: Array<Record<string, LabelChoice>> = []
  failNext = 0
  rejectIds = new Set<string>()

  async getBatch(): Promise<BatchPayload> {
    return JSON.parse(JSON.stringify(this.batch))
  }

  async getProgress(): Promise<ProgressPayload> {
    return { ...this.progress }
  }

  async submitLabels(_sid: string, labels: Record<string, LabelChoice>): Promise<SubmitResult> {
    if (this.failNext > 0) {
      this.failNext -= 1
      throw new Error('connection refused')
    }
    this.posts.push(labels)
    const accepted: string[] = []
    const rejected: Record<string, string> = {}
    for (const [id, choice] of Object.entries(labels)) {
      if (this.rejectIds.has(id)) {
        rejected[id] = 'label 7 out of range 0..1'
        continue
      }
      const sample = this.batch.samples.find((s) => String(s.id) === id)
      if (sample) sample.status = choice === 'skip' ? 'skipped' : 'labeled'
      if (choice !== 'skip') this.progress.labeled += 1
      accepted.push(id)
    }
    const complete = this.batch.samples.every((s) => s.status !== 'pending')
    return {
      accepted,
      rejected,
      batch_complete: complete,
      cycle: complete ? 1 : 0,
      labeled: this.progress.labeled,
      next_batch_available: true,
    }
  }
}

function controllerWith(api: FakeApi): SessionController {
  return new SessionController(api as never, 'sess')
}

describe('SessionController', () => {
  it('loads and presents the first pending sample', async () => {
    const api = new FakeApi()
    const controller = controllerWith(api)
    await controller.load()
    const view = controller.view()
    expect(view.phase).toBe('annotating')
    expect(view.sample?.id).toBe(0)
    expect(view.total).toBe(5)
    expect(view.answered).toBe(0)
  })

  it('advances optimistically and flushes in submission order', async () => {
    const api = new FakeApi()
    const controller = controllerWith(api)
    await controller.load()
    await controller.choose(1)
    await controller.choose(0)
    await controller.skip()
    expect(api.posts).toEqual([{ '0': 1 }, { '1': 0 }, { '2': 'skip' }])
    expect(controller.view().answered).toBe(3)
    expect(controller.view().sample?.id).toBe(3)
  })

  it('rolls back only the rejected sample', async () => {
    const api = new FakeApi()
    api.rejectIds.add('1')
    const controller = controllerWith(api)
    await controller.load()
    await controller.choose(0) // sample 0 accepted
    await controller.choose(1) // sample 1 rejected -> re-presented
    const view = controller.view()
    expect(view.notice).toContain('sample 1 rejected')
    expect(view.sample?.id).toBe(1)
    expect(view.answered).toBe(1)
  })

  it('preserves the buffer across a network failure and retries', async () => {
    const api = new FakeApi()
    const controller = controllerWith(api)
    await controller.load()
    api.failNext = 1
    await controller.choose(0)
    let view = controller.view()
    expect(view.networkError).toContain('connection refused')
    expect(view.bufferedCount).toBe(1)
    expect(api.posts).toHaveLength(0)

    await controller.retry()
    view = controller.view()
    expect(view.networkError).toBeNull()
    expect(view.bufferedCount).toBe(0)
    expect(api.posts).toEqual([{ '0': 0 }])
  })

  it('shows the cycle-complete screen after the final label', async () => {
    const api = new FakeApi()
    api.batch = batchOf(2)
    const controller = controllerWith(api)
    await controller.load()
    await controller.choose(0)
    expect(controller.view().phase).toBe('annotating')
    await controller.choose(1)
    expect(controller.view().phase).toBe('cycle-complete')
  })

  it('resumes at the first pending sample after reload', async () => {
    const api = new FakeApi()
    const controller = controllerWith(api)
    await controller.load()
    await controller.choose(0)
    await controller.choose(1)

    const reloaded = controllerWith(api)
    await reloaded.load()
    const view = reloaded.view()
    expect(view.phase).toBe('annotating')
    expect(view.sample?.id).toBe(2)
    expect(view.answered).toBe(2)
  })

  it('reports session completion when the budget is reached', async () => {
    const api = new FakeApi()
    api.progress = { ...progressOf(100), pool: 30 }
    const controller = controllerWith(api)
    await controller.load()
    expect(controller.view().phase).toBe('session-complete')
  })

  it('surfaces load failures as the error phase', async () => {
    const api = new FakeApi()
    api.getProgress = async () => {
      throw new Error('boom')
    }
    const controller = controllerWith(api)
    await controller.load()
    expect(controller.view().phase).toBe('error')
    expect(controller.view().networkError).toContain('boom')
  })
})
