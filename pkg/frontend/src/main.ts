// Console entry point: one websocket, one state value, DOM sync on change.

import { abortFrame, sayFrame, selectTaskFrame } from "./protocol.js";
import { SceneRenderer } from "./render.js";
import { applyRaw, goalTitle, initialState, setConnection, type Connection, type ViewState } from "./state.js";
import { openSocket } from "./ws.js";

const el = {
  status: document.getElementById("status") as HTMLSpanElement,
  badge: document.getElementById("badge") as HTMLSpanElement,
  banner: document.getElementById("banner") as HTMLSpanElement,
  task: document.getElementById("task") as HTMLSelectElement,
  goalBtn: document.getElementById("goal-btn") as HTMLButtonElement,
  overlay: document.getElementById("goal-overlay") as HTMLDivElement,
  agents: document.getElementById("agents") as HTMLDivElement,
  feed: document.getElementById("feed") as HTMLDivElement,
  say: document.getElementById("say") as HTMLInputElement,
  stop: document.getElementById("stop") as HTMLButtonElement,
};

let state: ViewState = initialState();
let feedCursor = 0;
let taskCount = -1;
let showGoal = false;
let drawQueued = false;

const renderer = new SceneRenderer(document.getElementById("scene") as HTMLCanvasElement);

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:8765/ws`;

const socket = openSocket(wsUrl, {
  onRaw(raw: string) {
    state = applyRaw(state, raw);
    sync();
  },
  onStatus(status: Connection) {
    state = setConnection(state, status);
    sync();
  },
});

// Snapshots can arrive faster than the display refreshes; batch to one draw.
function scheduleDraw(): void {
  if (drawQueued) return;
  drawQueued = true;
  requestAnimationFrame(() => {
    drawQueued = false;
    renderer.draw(state.snapshot);
  });
}

function entityName(id: string): string {
  const hit = state.snapshot?.entities.find((e) => e.id === id);
  return hit ? hit.name : id;
}

function syncAgents(): void {
  const rows: string[] = [];
  for (const agent of state.snapshot?.agents ?? []) {
    const working = state.pending.includes(agent.name) ? '<span class="working">working&hellip;</span>' : "";
    const carry = agent.holding ? `<span class="carry">carrying ${entityName(agent.holding)}</span>` : "";
    rows.push(
      `<div class="agent-row"><span class="dot" style="background:${cssAgent(agent.color)}"></span>` +
        `<b>${agent.name}</b>${working}${carry}</div>`,
    );
  }
  el.agents.innerHTML = rows.join("");
}

function cssAgent(color: string): string {
  if (color === "yellow") return "#e6b422";
  if (color === "red") return "#d2493b";
  if (color === "blue") return "#3f7ad6";
  return "#cccccc";
}

function syncFeed(): void {
  for (; feedCursor < state.feed.length; feedCursor++) {
    const entry = state.feed[feedCursor];
    if (!entry) continue;
    const div = document.createElement("div");
    if (entry.who === "user") {
      div.className = "bubble user";
      div.textContent = entry.text;
    } else if (entry.who === "agent") {
      div.className = `bubble agent ${(entry.agent ?? "").toLowerCase()}`;
      const name = document.createElement("div");
      name.className = "name";
      name.textContent = entry.agent ?? "";
      const body = document.createElement("div");
      body.textContent = entry.text;
      div.append(name, body);
    } else {
      div.className = entry.who;
      div.textContent = entry.agent ? `${entry.agent}: ${entry.text}` : entry.text;
    }
    el.feed.append(div);
  }
  el.feed.scrollTop = el.feed.scrollHeight;
}

function syncTasks(): void {
  const snap = state.snapshot;
  if (!snap) return;
  if (snap.tasks.length !== taskCount) {
    taskCount = snap.tasks.length;
    el.task.innerHTML = '<option value="">pick a task</option>';
    for (const task of snap.tasks) {
      const opt = document.createElement("option");
      opt.value = String(task.id);
      opt.textContent = `${task.id}. ${task.title}`;
      el.task.append(opt);
    }
  }
  const current = snap.task ? String(snap.task.id) : "";
  if (el.task.value !== current) el.task.value = current;
  // Mark the finished task in its own option text.
  for (const opt of el.task.options) {
    const done = snap.goal_reached && snap.task && opt.value === String(snap.task.id);
    const plain = opt.textContent?.replace(/^✓ /, "") ?? "";
    opt.textContent = done ? `✓ ${plain}` : plain;
  }
}

function syncOverlay(): void {
  const snap = state.snapshot;
  const task = snap?.task ? snap.tasks.find((t) => t.id === snap.task?.id) : undefined;
  if (!showGoal || !task) {
    el.overlay.hidden = true;
    return;
  }
  el.overlay.hidden = false;
  (el.overlay.querySelector("h2") as HTMLElement).textContent = task.title;
  (el.overlay.querySelector("p") as HTMLElement).textContent = task.description;
}

function sync(): void {
  el.status.textContent = state.connection;
  el.status.className = state.connection;
  el.badge.textContent = state.badge ?? "";
  const banner = goalTitle(state);
  el.banner.hidden = banner === null;
  el.banner.textContent = banner === null ? "" : `goal reached: ${banner}`;
  const offline = state.connection !== "open";
  el.say.disabled = offline;
  el.stop.disabled = offline;
  el.task.disabled = offline;
  syncAgents();
  syncFeed();
  syncTasks();
  syncOverlay();
  scheduleDraw();
}

// Every control sends exactly one frame per activation.
el.say.addEventListener("keydown", (e) => {
  if (e.key !== "Enter") return;
  e.preventDefault();
  const text = el.say.value.trim();
  if (text && socket.send(sayFrame(text))) el.say.value = "";
});

el.stop.addEventListener("click", () => {
  socket.send(abortFrame());
});

el.task.addEventListener("change", () => {
  const id = parseInt(el.task.value, 10);
  if (!Number.isNaN(id)) socket.send(selectTaskFrame(id));
});

// Viewing the goal is purely local; no frame goes out.
el.goalBtn.addEventListener("click", () => {
  showGoal = !showGoal;
  syncOverlay();
});

sync();
