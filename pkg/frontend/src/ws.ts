// Thin websocket wrapper with a fixed-delay reconnect loop.

import type { Connection } from "./state.js";

const RETRY_MS = 1000;

export interface SocketHooks {
  onRaw(raw: string): void;
  onStatus(status: Connection): void;
}

export interface Socket {
  send(frame: string): boolean;
  close(): void;
}

export function openSocket(url: string, hooks: SocketHooks): Socket {
  let ws: WebSocket | null = null;
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;

  const dial = () => {
    hooks.onStatus("connecting");
    ws = new WebSocket(url);
    ws.onopen = () => hooks.onStatus("open");
    ws.onmessage = (e) => hooks.onRaw(String(e.data));
    ws.onerror = () => ws?.close();
    ws.onclose = () => {
      hooks.onStatus("closed");
      if (!stopped) timer = setTimeout(dial, RETRY_MS);
    };
  };
  dial();

  return {
    send(frame: string): boolean {
      if (ws && ws.readyState === WebSocket.OPEN) {
        ws.send(frame);
        return true;
      }
      return false;
    },
    close() {
      stopped = true;
      clearTimeout(timer);
      ws?.close();
    },
  };
}
