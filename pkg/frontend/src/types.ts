// Wire types for the annotation service; field names mirror the HTTP API.

export type SampleStatus = 'pending' | 'labeled' | 'skipped'

export interface BatchSample {
  id: number | string
  text: string
  status: SampleStatus
}

export interface BatchPayload {
  batch_id: string
  cycle: number
  num_classes: number
  class_names: string[]
  samples: BatchSample[]
}

export interface ProgressPayload {
  labeled: number
  budget: number
  cycle: number
  pool: number
  strategy: string
  alpha: number | null
  f1_history?: number[]
}

export interface SubmitResult {
  accepted: string[]
  rejected: Record<string, string>
  batch_complete: boolean
  cycle: number
  labeled: number
  next_batch_available: boolean
}

export type LabelChoice = number | 'skip'
