// Top-down scene renderer. Every draw starts from the latest snapshot and
// nothing else, so the picture can never drift from the service's world.

import type { AgentInfo, DoorInfo, EntityInfo, WorldSnapshot } from "./protocol.js";

const WORLD_W = 20; // metres
const WORLD_H = 14;

// Timed doors count down from the service default; snapshots carry only the
// remaining seconds, so the bar denominator is pinned here.
const DOOR_OPEN_S = 6;

const AGENT_FILL: Record<string, string> = {
  yellow: "#e6b422",
  red: "#d2493b",
  blue: "#3f7ad6",
};

const REGION_FILL: Record<string, string> = {
  purple: "#423a5e",
  grey: "#34343c",
};

const KIND_STYLE: Record<string, { fill: string; w: number; h: number }> = {
  candle: { fill: "#e8a33d", w: 0.5, h: 0.5 },
  fridge: { fill: "#9fb8c4", w: 1.2, h: 1.2 },
  dumbbell: { fill: "#7d7d86", w: 0.9, h: 0.45 },
  chest: { fill: "#8a6633", w: 1.1, h: 0.8 },
  key: { fill: "#d8d8d8", w: 0.45, h: 0.45 },
  bed: { fill: "#6f4f8f", w: 2.2, h: 1.3 },
  vase: { fill: "#6fc0b8", w: 0.45, h: 0.45 },
  chair: { fill: "#a1713f", w: 0.8, h: 0.8 },
  plate: { fill: "#e4e4ee", w: 0.5, h: 0.5 },
  pressure_plate: { fill: "#4a4a52", w: 1.2, h: 1.2 },
  trash_bin: { fill: "#5578a0", w: 0.9, h: 0.9 },
};

const COLOR_WORDS: Record<string, string> = {
  red: "#d2493b",
  yellow: "#e6c822",
  golden: "#d9a520",
  blue: "#3f7ad6",
};

function colorFromName(name: string, fallback: string): string {
  for (const word of name.split(" ")) {
    const hit = COLOR_WORDS[word];
    if (hit) return hit;
  }
  return fallback;
}

export class SceneRenderer {
  private canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private scale: number;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.scale = canvas.width / WORLD_W;
  }

  // World y points up, canvas y points down.
  private px(x: number): number {
    return x * this.scale;
  }

  private py(y: number): number {
    return this.canvas.height - y * this.scale;
  }

  draw(snapshot: WorldSnapshot | null): void {
    const ctx = this.ctx;
    ctx.fillStyle = "#222228";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (!snapshot || !snapshot.map) {
      ctx.fillStyle = "#8b8b94";
      ctx.font = "15px system-ui";
      ctx.textAlign = "center";
      ctx.fillText("no task selected", this.canvas.width / 2, this.canvas.height / 2);
      return;
    }
    for (const region of snapshot.map.regions) this.drawRegion(region.polygon, region.color, region.name);
    for (const entity of snapshot.entities) this.drawEntity(entity);
    for (const door of snapshot.doors) this.drawDoor(door);
    for (const agent of snapshot.agents) this.drawAgent(agent);
    this.drawUser(snapshot.map.user);
  }

  private drawRegion(polygon: [number, number][], color: string, name: string): void {
    const ctx = this.ctx;
    if (polygon.length === 0) return;
    ctx.beginPath();
    let cx = 0;
    let cy = 0;
    polygon.forEach(([x, y], i) => {
      cx += x / polygon.length;
      cy += y / polygon.length;
      if (i === 0) ctx.moveTo(this.px(x), this.py(y));
      else ctx.lineTo(this.px(x), this.py(y));
    });
    ctx.closePath();
    ctx.fillStyle = REGION_FILL[color] ?? "#3a3a42";
    ctx.fill();
    ctx.strokeStyle = "#5a5766";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.fillStyle = "#77747f";
    ctx.font = "11px system-ui";
    ctx.textAlign = "center";
    ctx.fillText(name, this.px(cx), this.py(cy));
  }

  private drawEntity(entity: EntityInfo): void {
    if (entity.disposed || entity.x === null || entity.y === null) return;
    const ctx = this.ctx;
    const style = KIND_STYLE[entity.kind] ?? { fill: "#bbbbbb", w: 0.6, h: 0.6 };
    const held = entity.held_by !== null;
    const shrink = held ? 0.55 : 1;
    const w = style.w * shrink * this.scale;
    const h = style.h * shrink * this.scale;
    // A carried object rides beside its holder instead of underneath it.
    const x = this.px(entity.x) + (held ? 0.55 * this.scale : 0);
    const y = this.py(entity.y) - (held ? 0.55 * this.scale : 0);
    ctx.globalAlpha = entity.inside !== null ? 0.55 : 1;
    ctx.fillStyle = entity.kind === "key" ? colorFromName(entity.name, style.fill) : style.fill;
    if (entity.kind === "pressure_plate") {
      ctx.strokeStyle = ctx.fillStyle;
      ctx.lineWidth = 2;
      ctx.strokeRect(x - w / 2, y - h / 2, w, h);
    } else {
      ctx.fillRect(x - w / 2, y - h / 2, w, h);
    }
    ctx.globalAlpha = 1;
    if (!held) {
      ctx.fillStyle = "#c8c6cf";
      ctx.font = "10px system-ui";
      ctx.textAlign = "center";
      ctx.fillText(entity.name, x, y + h / 2 + 11);
    }
    if (entity.broken) this.tag(x, y - h / 2 - 4, "broken", "#e06055");
    else if (entity.flipped) this.tag(x, y - h / 2 - 4, "flipped", "#c8c6cf");
  }

  private drawDoor(door: DoorInfo): void {
    const ctx = this.ctx;
    const x = this.px(door.x);
    const y = this.py(door.y);
    const w = 1.2 * this.scale;
    const h = 0.3 * this.scale;
    ctx.fillStyle = door.open ? "#3fa34d" : door.locked ? "#b03030" : "#8b8b94";
    ctx.fillRect(x - w / 2, y - h / 2, w, h);
    ctx.fillStyle = "#c8c6cf";
    ctx.font = "10px system-ui";
    ctx.textAlign = "center";
    ctx.fillText(door.name + (door.locked ? " (locked)" : ""), x, y + h / 2 + 11);
    if (door.timer_s !== null) {
      const frac = Math.max(0, Math.min(1, door.timer_s / DOOR_OPEN_S));
      ctx.fillStyle = "#333";
      ctx.fillRect(x - w / 2, y - h / 2 - 7, w, 4);
      ctx.fillStyle = "#58c26e";
      ctx.fillRect(x - w / 2, y - h / 2 - 7, w * frac, 4);
    }
  }

  private drawAgent(agent: AgentInfo): void {
    const ctx = this.ctx;
    const x = this.px(agent.x);
    const y = this.py(agent.y);
    const r = 0.45 * this.scale;
    ctx.beginPath();
    ctx.arc(x, y, r, 0, Math.PI * 2);
    ctx.fillStyle = AGENT_FILL[agent.color] ?? "#cccccc";
    ctx.fill();
    ctx.strokeStyle = "#15151a";
    ctx.lineWidth = 2;
    ctx.stroke();
    if (agent.moving) {
      ctx.beginPath();
      ctx.arc(x, y, r + 4, 0, Math.PI * 2);
      ctx.setLineDash([4, 4]);
      ctx.strokeStyle = "#e4e4ee";
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.setLineDash([]);
    }
    ctx.fillStyle = "#f0eff4";
    ctx.font = "bold 11px system-ui";
    ctx.textAlign = "center";
    ctx.fillText(agent.name, x, y - r - 6);
  }

  private drawUser(at: [number, number]): void {
    const ctx = this.ctx;
    const x = this.px(at[0]);
    const y = this.py(at[1]);
    const s = 0.35 * this.scale;
    ctx.beginPath();
    ctx.moveTo(x, y - s);
    ctx.lineTo(x - s, y + s);
    ctx.lineTo(x + s, y + s);
    ctx.closePath();
    ctx.fillStyle = "#e4e4ee";
    ctx.fill();
    ctx.fillStyle = "#c8c6cf";
    ctx.font = "10px system-ui";
    ctx.textAlign = "center";
    ctx.fillText("you", x, y + s + 11);
  }

  private tag(x: number, y: number, text: string, color: string): void {
    const ctx = this.ctx;
    ctx.fillStyle = color;
    ctx.font = "italic 10px system-ui";
    ctx.textAlign = "center";
    ctx.fillText(text, x, y);
  }
}
