// Wire protocol between the live service and this client.
// One JSON object per WebSocket frame, shaped {type, payload}.

export interface PointSummary {
  id: string
  pre: 'WA' | 'WF'
  post: 'CH' | 'NCH'
}

export interface IntervalSummary {
  id: string
  kind: 'TCR' | 'TO'
  src: string
  dst: string
  condition?: string
  duration?: number
  proc?: string
}

export interface VariableDecl {
  name: string
  lo: number
  hi: number
}

export interface HelloPayload {
  format: string
  start: string
  end: string | null
  tick_ms: number
  points: PointSummary[]
  intervals: IntervalSummary[]
  variables: VariableDecl[]
}

export interface ProcEvent {
  type: 'proc_start' | 'proc_stop'
  name: string
  params: string[]
  interval: string
}

export interface TickPayload {
  unit: number
  active: string[]
  transfers: [string, string][]
  proc_events: ProcEvent[]
  vars: Record<string, number>
  warnings: string[]
  points: Record<string, boolean>
}

export type ServerMessage =
  | { type: 'hello'; payload: HelloPayload }
  | { type: 'tick'; payload: TickPayload }
  | { type: 'ended'; payload: { final_unit: number | null } }
  | { type: 'error'; payload: { message: string } }

export type TransportCommand = 'start' | 'stop' | 'reset'

export type ClientMessage =
  | { type: 'set_var'; payload: { name: string; value: number } }
  | { type: 'transport'; payload: { command: TransportCommand } }
  | { type: 'subscribe' }
