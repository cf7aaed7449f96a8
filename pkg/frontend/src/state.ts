// View state for the console. Pure functions over server frames so the
// whole thing is testable without a browser. The scene itself is never
// accumulated here: the latest snapshot is the only truth about the world,
// which keeps a reconnecting client identical to one that never dropped.

import type { ServerFrame, SessionEvent, WorldSnapshot } from "./protocol.js";
import { parseServerFrame } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface ChatLine {
  who: "user" | "agent" | "action" | "system";
  agent: string | null;
  text: string;
}

export interface ViewState {
  connection: Connection;
  snapshot: WorldSnapshot | null;
  feed: ChatLine[];
  /** Robots still working on an instruction, kept sorted for stable rendering. */
  pending: string[];
  /** Transient notice (dropped frame, rejected command); cleared by the next good frame. */
  badge: string | null;
}

export function initialState(): ViewState {
  return { connection: "connecting", snapshot: null, feed: [], pending: [], badge: null };
}

function line(who: ChatLine["who"], agent: string | null, text: string): ChatLine {
  return { who, agent, text };
}

function withLine(state: ViewState, entry: ChatLine): ViewState {
  return { ...state, feed: [...state.feed, entry] };
}

function addPending(pending: string[], names: string[]): string[] {
  return [...new Set([...pending, ...names])].sort();
}

function dropPending(pending: string[], name: string): string[] {
  return pending.filter((n) => n !== name);
}

function str(value: unknown): string {
  return typeof value === "string" ? value : JSON.stringify(value);
}

function applyEvent(state: ViewState, ev: SessionEvent): ViewState {
  const p = ev.payload;
  switch (ev.kind) {
    case "user_utterance":
      return withLine(state, line("user", null, str(p.text)));
    case "routing": {
      const recipients = Array.isArray(p.recipients) ? p.recipients.filter((r): r is string => typeof r === "string") : [];
      const next = { ...state, pending: addPending(state.pending, recipients) };
      return typeof p.note === "string" ? withLine(next, line("system", null, p.note)) : next;
    }
    case "agent_reply":
      return withLine({ ...state, pending: ev.agent ? dropPending(state.pending, ev.agent) : state.pending }, line("agent", ev.agent, str(p.text)));
    case "tool_executed":
    case "tool_rejected":
      return withLine(state, line("action", ev.agent, str(p.feedback)));
    case "world_change":
      return withLine(state, line("system", null, str(p.text)));
    case "goal_reached":
      return withLine(state, line("system", null, `Goal reached: ${str(p.title)}`));
    case "abort":
      return withLine({ ...state, pending: [] }, line("system", null, "Emergency stop."));
    case "task_selected":
      return withLine({ ...state, pending: [] }, line("system", null, `Task ${str(p.task)} selected: ${str(p.title)}`));
    case "error": {
      const cleared = ev.agent ? dropPending(state.pending, ev.agent) : state.pending;
      const prefix = ev.agent ? `${ev.agent} ` : "";
      return withLine({ ...state, pending: cleared }, line("system", null, `${prefix}error (${str(p.where)}): ${str(p.text)}`));
    }
    default:
      return state; // unknown kinds pass through untouched
  }
}

export function applyFrame(state: ViewState, frame: ServerFrame): ViewState {
  switch (frame.type) {
    case "event":
      return applyEvent({ ...state, badge: null }, frame);
    case "snapshot":
      return { ...state, badge: null, snapshot: frame.world };
    case "error":
      return withLine({ ...state, badge: frame.text }, line("system", null, frame.text));
  }
}

/** Feed one raw websocket message through the store; malformed input only sets the badge. */
export function applyRaw(state: ViewState, raw: string): ViewState {
  const frame = parseServerFrame(raw);
  if (frame === null) return { ...state, badge: "dropped an unreadable frame" };
  return applyFrame(state, frame);
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  // Turn terminals may have been missed while offline, so indicators reset.
  const pending = connection === "open" ? state.pending : [];
  return { ...state, connection, pending };
}

/** Title to show in the goal banner, derived from the snapshot alone. */
export function goalTitle(state: ViewState): string | null {
  const snap = state.snapshot;
  if (!snap || !snap.goal_reached) return null;
  return snap.task ? snap.task.title : "";
}
