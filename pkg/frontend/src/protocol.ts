// Wire types for the operator websocket. The shapes mirror the session
// service exactly; anything that does not fit is dropped by the caller.

export interface SessionEvent {
  seq: number;
  sim_time: number;
  wall_time: number;
  layer: string;
  kind: string;
  agent: string | null;
  payload: Record<string, unknown>;
}

export interface TaskInfo {
  id: number;
  title: string;
  description: string;
}

export interface RegionInfo {
  id: string;
  name: string;
  color: string;
  polygon: [number, number][];
}

export interface AgentInfo {
  name: string;
  color: string;
  x: number;
  y: number;
  region: string;
  holding: string | null;
  moving: boolean;
}

export interface EntityInfo {
  id: string;
  kind: string;
  name: string;
  x: number | null;
  y: number | null;
  region: string | null;
  held_by: string | null;
  inside: string | null;
  flipped: boolean;
  broken: boolean;
  disposed: boolean;
}

export interface DoorInfo {
  id: string;
  name: string;
  x: number;
  y: number;
  open: boolean;
  locked: boolean;
  timer_s: number | null;
}

export interface WorldSnapshot {
  task: { id: number; title: string } | null;
  tasks: TaskInfo[];
  clock: number;
  goal_reached: boolean;
  map: { regions: RegionInfo[]; user: [number, number] } | null;
  agents: AgentInfo[];
  entities: EntityInfo[];
  doors: DoorInfo[];
}

export type EventFrame = { type: "event" } & SessionEvent;
export type SnapshotFrame = { type: "snapshot"; world: WorldSnapshot };
export type ErrorFrame = { type: "error"; text: string };
export type ServerFrame = EventFrame | SnapshotFrame | ErrorFrame;

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isEventFrame(obj: Record<string, unknown>): boolean {
  return (
    typeof obj.seq === "number" &&
    typeof obj.sim_time === "number" &&
    typeof obj.wall_time === "number" &&
    typeof obj.layer === "string" &&
    typeof obj.kind === "string" &&
    (obj.agent === null || typeof obj.agent === "string") &&
    isRecord(obj.payload)
  );
}

function isSnapshotFrame(obj: Record<string, unknown>): boolean {
  const world = obj.world;
  return (
    isRecord(world) &&
    Array.isArray(world.tasks) &&
    typeof world.clock === "number" &&
    typeof world.goal_reached === "boolean" &&
    Array.isArray(world.agents) &&
    Array.isArray(world.entities) &&
    Array.isArray(world.doors)
  );
}

/** Parse one server frame, returning null for anything malformed. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isRecord(data)) return null;
  switch (data.type) {
    case "event":
      return isEventFrame(data) ? (data as unknown as EventFrame) : null;
    case "snapshot":
      return isSnapshotFrame(data) ? (data as unknown as SnapshotFrame) : null;
    case "error":
      return typeof data.text === "string" ? (data as ErrorFrame) : null;
    default:
      return null;
  }
}

// Client frames. Each builder yields exactly one frame.

export function sayFrame(text: string): string {
  return JSON.stringify({ type: "say", text });
}

export function abortFrame(): string {
  return JSON.stringify({ type: "abort" });
}

export function selectTaskFrame(id: number): string {
  return JSON.stringify({ type: "select_task", id });
}
