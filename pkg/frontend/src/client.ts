// WebSocket wiring around SessionView: reconnect with resync, and
// re-assertion of held variables after every tick.

import type { ClientMessage, ServerMessage } from './protocol'
import { SessionView } from './session'

export interface LiveClient {
  view: SessionView
  send(msg: ClientMessage | null): void
  close(): void
}

export function connectLive(
  url: string,
  onChange: (view: SessionView) => void,
  reconnectMs = 1000,
): LiveClient {
  const view = new SessionView()
  let ws: WebSocket | null = null
  let closed = false

  const open = () => {
    ws = new WebSocket(url)
    ws.onmessage = (ev) => {
      let msg: ServerMessage
      try {
        msg = JSON.parse(ev.data)
      } catch {
        return
      }
      view.apply(msg)
      if (msg.type === 'tick') {
        for (const out of view.reassertions()) ws?.send(JSON.stringify(out))
      }
      onChange(view)
    }
    ws.onclose = () => {
      // server resends hello on reconnect, which rebuilds the view
      if (!closed) setTimeout(open, reconnectMs)
    }
  }
  open()

  return {
    view,
    send(msg) {
      if (msg && ws && ws.readyState === WebSocket.OPEN) {
        ws.send(JSON.stringify(msg))
      }
    },
    close() {
      closed = true
      ws?.close()
    },
  }
}
