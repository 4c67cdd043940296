// Server-authoritative client state. Every field here mirrors something the
// server said; the UI never advances hp, points, or durian state on its own.
// A gate denial leaves the durian list empty — nothing to render.

import type {
  DurianMarker,
  LeaderboardEntry,
  QuestionView,
  ServerMessage,
  SessionSummary,
} from "./protocol.js";

export interface PendingQuestion {
  durianId: number;
  question: QuestionView;
}

export interface Toast {
  kind: "info" | "warn" | "error";
  text: string;
}

export class ClientState {
  playerId: string | null = null;
  phase: SessionSummary["phase"] | null = null;
  hp: number | null = null;
  pointsEarnedRound = 0;
  pointsTotal: number | null = null;
  level: number | null = null;
  durians: DurianMarker[] = [];
  pendingQuestion: PendingQuestion | null = null;
  leaderboard: LeaderboardEntry[] = [];
  toasts: Toast[] = [];
  gateDenied = false;
  onChange: (() => void) | null = null;

  private notify(): void {
    this.onChange?.();
  }

  pushToast(kind: Toast["kind"], text: string): void {
    this.toasts.push({ kind, text });
    if (this.toasts.length > 5) this.toasts.shift();
    this.notify();
  }

  applySession(summary: SessionSummary): void {
    this.playerId = summary.player_id;
    this.phase = summary.phase;
    this.hp = summary.hp;
    this.pointsEarnedRound = summary.points_earned;
    this.durians = summary.durians;
    this.gateDenied = false;
    this.notify();
  }

  applyGateDenied(): void {
    this.gateDenied = true;
    this.durians = [];
    this.phase = "AwaitingMaskGate";
    this.notify();
  }

  applyLeaderboard(entries: LeaderboardEntry[]): void {
    this.leaderboard = entries;
    this.notify();
  }

  get activeDurians(): DurianMarker[] {
    return this.durians.filter((d) => d.state === "Active");
  }

  applyServerMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "Alert": {
        const kind = msg.payload.kind === "AbnormalSpeed" ? "warn" : "info";
        this.pushToast(kind, msg.payload.detail ?? msg.payload.kind);
        break;
      }
      case "QuestionIssued": {
        this.pendingQuestion = {
          durianId: msg.payload.durian_id,
          question: msg.payload.question,
        };
        this.notify();
        break;
      }
      case "CaptureResult": {
        this.hp = msg.payload.hp;
        this.pointsEarnedRound = msg.payload.points_earned;
        this.phase = msg.payload.phase;
        if (msg.payload.captured && this.pendingQuestion) {
          const id = this.pendingQuestion.durianId;
          this.durians = this.durians.map((d) =>
            d.id === id ? { ...d, state: "Captured" as const } : d
          );
        }
        this.pendingQuestion = null;
        this.pushToast(
          msg.payload.correct ? "info" : "warn",
          msg.payload.correct ? "Correct! Durian captured." : "Wrong answer."
        );
        break;
      }
      case "DurianUpdate": {
        this.durians = msg.payload.durians;
        this.notify();
        break;
      }
      case "ScoreUpdate": {
        if (msg.payload.player_id === this.playerId) {
          this.pointsTotal = msg.payload.points_total;
          this.level = msg.payload.level;
          this.pointsEarnedRound = msg.payload.points_earned_round;
          this.hp = msg.payload.hp;
          this.notify();
        } else {
          // Someone else scored: refreshing the leaderboard is up to the app
          // shell; just surface it.
          this.pushToast("info", `${msg.payload.player_id} scored a point`);
        }
        break;
      }
      case "Error": {
        this.pushToast("error", `${msg.payload.code}: ${msg.payload.message}`);
        break;
      }
    }
  }
}
