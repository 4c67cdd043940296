// Browser app shell: wires the login, mask-gate, map, question, shop and
// leaderboard views to the REST client and the live channel.

import { ApiClient, ApiError } from "./api.js";
import { LiveChannel } from "./live.js";
import { ClientState } from "./state.js";
import { MapView } from "./mapView.js";
import { WalkSimulator } from "./walkSim.js";

const DEFAULT_CENTER = { lat: 36.0665, lon: 120.337 };

// Landmark fixtures for the demo gate: a webcam pipeline would supply real
// confidences; here a checkbox picks masked vs unmasked.
const EYE_NAMES = [
  "left_eye",
  "right_eye",
  "left_of_left_eyebrow",
  "right_of_left_eyebrow",
  "left_of_right_eyebrow",
  "right_of_right_eyebrow",
  "left_eye_left_corner",
  "left_eye_right_corner",
  "left_eye_top_boundary",
  "left_eye_bottom_boundary",
  "right_eye_left_corner",
  "right_eye_right_corner",
  "right_eye_top_boundary",
  "right_eye_bottom_boundary",
];
const LOWER_FACE_NAMES = [
  "forehead_glabella",
  "nose_tip",
  "nose_bottom_left",
  "nose_bottom_right",
  "nose_bottom_center",
  "mouth_left",
  "mouth_right",
  "mouth_center",
  "upper_lip",
  "lower_lip",
  "chin_gnathion",
  "left_cheek",
  "right_cheek",
];

function landmarkFixture(masked: boolean): Record<string, { confidence: number }> {
  const doc: Record<string, { confidence: number }> = {};
  for (const name of EYE_NAMES) doc[name] = { confidence: 0.9 };
  for (const name of LOWER_FACE_NAMES) doc[name] = { confidence: masked ? 0.1 : 0.9 };
  return doc;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(baseUrl: string): void {
  const api = new ApiClient(baseUrl);
  const state = new ClientState();
  const wsUrl = baseUrl.replace(/^http/, "ws");
  let live: LiveChannel | null = null;
  const walker = new WalkSimulator({ ...DEFAULT_CENTER });
  const map = new MapView(el<HTMLCanvasElement>("map-canvas"));

  const views = ["login-view", "gate-view", "game-view"] as const;
  function show(view: (typeof views)[number]): void {
    for (const v of views) el(v).style.display = v === view ? "block" : "none";
  }

  function render(): void {
    el("hud-hp").textContent = state.hp === null ? "-" : state.hp.toFixed(1);
    el("hud-round-points").textContent = String(state.pointsEarnedRound);
    el("hud-total-points").textContent =
      state.pointsTotal === null ? "-" : String(state.pointsTotal);
    el("hud-level").textContent = state.level === null ? "-" : String(state.level);
    el("hud-phase").textContent = state.phase ?? "-";

    map.render(walker.position, state.durians);

    const modal = el("question-modal");
    if (state.pendingQuestion) {
      modal.style.display = "block";
      el("question-text").textContent = state.pendingQuestion.question.text;
      const list = el("question-choices");
      list.innerHTML = "";
      state.pendingQuestion.question.choices.forEach((choice, i) => {
        const btn = document.createElement("button");
        btn.textContent = choice;
        btn.onclick = () => {
          const pq = state.pendingQuestion;
          if (pq && live) {
            live.sendCaptureAnswer(pq.durianId, pq.question.id, i);
          }
        };
        list.appendChild(btn);
      });
    } else {
      modal.style.display = "none";
    }

    el("toast-list").innerHTML = state.toasts
      .map((t) => `<li class="toast-${t.kind}">${t.text}</li>`)
      .join("");

    el("leaderboard-list").innerHTML = state.leaderboard
      .map(
        (e) =>
          `<li>#${e.rank} ${e.player_id} — ${e.points_total} pts (lvl ${e.level})</li>`
      )
      .join("");
  }
  state.onChange = render;

  async function refreshLeaderboard(): Promise<void> {
    try {
      state.applyLeaderboard(await api.leaderboard(10));
    } catch {
      /* leaderboard is decorative; ignore transient failures */
    }
  }

  async function refreshShop(): Promise<void> {
    const items = await api.shopItems();
    el("shop-list").innerHTML = items
      .map(
        (it) =>
          `<li>${it.name} — ${it.cost} pts ` +
          `<button data-item="${it.item_id}">Buy</button></li>`
      )
      .join("");
    el("shop-list")
      .querySelectorAll("button")
      .forEach((btn) => {
        btn.onclick = async () => {
          try {
            const res = await api.purchase(btn.dataset.item!);
            state.pushToast("info", `Purchased. Balance: ${res.points_total} pts`);
          } catch (err) {
            state.pushToast("error", err instanceof ApiError ? err.message : String(err));
          }
        };
      });
  }

  el<HTMLButtonElement>("login-btn").onclick = async () => {
    const email = el<HTMLInputElement>("login-email").value;
    const password = el<HTMLInputElement>("login-password").value;
    const name = el<HTMLInputElement>("login-name").value;
    try {
      if (el<HTMLInputElement>("login-register").checked) {
        await api.register(email, password, name || email);
      }
      await api.login(email, password);
      show("gate-view");
    } catch (err) {
      el("login-error").textContent =
        err instanceof ApiError ? err.message : String(err);
    }
  };

  el<HTMLButtonElement>("gate-btn").onclick = async () => {
    const masked = el<HTMLInputElement>("gate-masked").checked;
    try {
      const verdict = await api.gateMask(landmarkFixture(masked));
      if (!verdict.masked) {
        state.applyGateDenied();
        el("gate-result").textContent = verdict.missing_face
          ? "No face detected — try again."
          : "No mask detected — put on a mask to play.";
        return;
      }
      const summary = await api.startSession(walker.position, verdict.verdict_id);
      state.applySession(summary);
      live = new LiveChannel(`${wsUrl}/ws?token=${api.token}`);
      live.onMessage = (msg) => state.applyServerMessage(msg);
      live.onClose = () => state.pushToast("warn", "Live channel closed.");
      await live.connect();
      live.sendFix(walker.position.lat, walker.position.lon, Date.now() / 1000);
      show("game-view");
      await refreshLeaderboard();
      await refreshShop();
    } catch (err) {
      el("gate-result").textContent =
        err instanceof ApiError ? err.message : String(err);
    }
  };

  // Arrow-pad walk controls: each click walks 5 m and reports a fix.
  const STEP_M = 5;
  const bearings: Record<string, number> = {
    "walk-n": 0,
    "walk-e": 90,
    "walk-s": 180,
    "walk-w": 270,
  };
  for (const [id, bearing] of Object.entries(bearings)) {
    el<HTMLButtonElement>(id).onclick = () => {
      walker.step(bearing, STEP_M);
      live?.sendFix(walker.position.lat, walker.position.lon, Date.now() / 1000);
      render();
    };
  }

  el<HTMLButtonElement>("leaderboard-refresh").onclick = refreshLeaderboard;

  setInterval(refreshLeaderboard, 10_000);
  show("login-view");
  render();
}
