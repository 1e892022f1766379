// Client-side session state: a pure reducer over server messages plus
// helpers that build outgoing messages. No DOM and no sockets here, so
// the whole thing is testable by replaying recorded message logs.

import type {
  ClientMessage,
  HelloPayload,
  ServerMessage,
  TickPayload,
  TransportCommand,
} from './protocol'

export interface Control {
  name: string
  kind: 'toggle' | 'slider'
  lo: number
  hi: number
  /** last value echoed by the engine, if any */
  value: number | null
  /** value sent but not yet seen in a tick */
  pending: number | null
}

export interface ActivationEntry {
  unit: number
  points: string[]
}

export class SessionView {
  hello: HelloPayload | null = null
  lastTick: TickPayload | null = null
  history: ActivationEntry[] = []
  controls: Control[] = []
  running = false
  endedAt: number | null = null
  errors: string[] = []
  /** sticky values re-asserted after every tick (tells last one unit) */
  private held = new Map<string, number>()

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case 'hello':
        this.applyHello(msg.payload)
        break
      case 'tick':
        this.applyTick(msg.payload)
        break
      case 'ended':
        this.endedAt = msg.payload.final_unit
        this.running = false
        break
      case 'error':
        this.errors.push(msg.payload.message)
        break
    }
  }

  private applyHello(hello: HelloPayload): void {
    // a fresh hello also arrives on reconnect: rebuild everything the
    // server owns, keep only what the performer was holding down
    this.hello = hello
    this.lastTick = null
    this.history = []
    this.errors = []
    this.endedAt = null
    this.controls = hello.variables.map((v) => ({
      name: v.name,
      kind: v.lo === 0 && v.hi === 1 ? 'toggle' : 'slider',
      lo: v.lo,
      hi: v.hi,
      value: null,
      pending: this.held.get(v.name) ?? null,
    }))
    for (const name of [...this.held.keys()]) {
      if (!hello.variables.some((v) => v.name === name)) this.held.delete(name)
    }
  }

  private applyTick(tick: TickPayload): void {
    this.lastTick = tick
    if (tick.active.length > 0) {
      this.history.push({ unit: tick.unit, points: [...tick.active] })
    }
    for (const control of this.controls) {
      const echoed = tick.vars[control.name]
      if (echoed !== undefined) {
        control.value = echoed
        if (control.pending === echoed) control.pending = null
      }
    }
  }

  control(name: string): Control | undefined {
    return this.controls.find((c) => c.name === name)
  }

  /** Build a set_var, clamping to the declared domain and marking the
   * control pending until a tick echoes the value. */
  setVar(name: string, value: number): ClientMessage | null {
    const control = this.control(name)
    if (!control) return null
    const clamped = Math.min(control.hi, Math.max(control.lo, Math.round(value)))
    control.pending = clamped
    this.held.set(name, clamped)
    return { type: 'set_var', payload: { name, value: clamped } }
  }

  release(name: string): void {
    this.held.delete(name)
  }

  /** Environment tells last one unit; re-assert held values after each
   * tick so a toggle stays on until released. */
  reassertions(): ClientMessage[] {
    return [...this.held.entries()].map(([name, value]) => ({
      type: 'set_var',
      payload: { name, value },
    }))
  }

  transportControl(cmd: TransportCommand): ClientMessage | null {
    if (this.endedAt !== null && cmd !== 'reset') return null
    if (cmd === 'start') this.running = true
    if (cmd === 'stop') this.running = false
    if (cmd === 'reset') {
      this.running = false
      this.endedAt = null
      this.lastTick = null
      this.history = []
    }
    return { type: 'transport', payload: { command: cmd } }
  }
}
