// Wire types shared with the game server. The client renders only what the
// server confirms; nothing here is computed locally.

export interface DurianMarker {
  id: number;
  lat: number;
  lon: number;
  state: "Active" | "Captured" | "Failed";
  snapped: boolean;
}

export interface SessionSummary {
  player_id: string;
  phase: "AwaitingMaskGate" | "Playing" | "RoundComplete";
  hp: number;
  points_earned: number;
  durians: DurianMarker[];
}

export interface MaskVerdict {
  verdict_id: string;
  masked: boolean;
  score: number;
  missing_face: boolean;
}

export interface QuestionView {
  id: number;
  text: string;
  choices: string[];
  locale: string;
}

export interface LeaderboardEntry {
  rank: number;
  player_id: string;
  points_total: number;
  level: number;
}

export type ServerMessageType =
  | "Alert"
  | "QuestionIssued"
  | "CaptureResult"
  | "DurianUpdate"
  | "ScoreUpdate"
  | "Error";

export interface ServerMessage {
  type: ServerMessageType;
  seq: number;
  ack?: number;
  payload: any;
}

export interface ClientMessage {
  type: "Fix" | "CaptureAnswer";
  seq: number;
  payload: any;
}
