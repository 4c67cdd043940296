// WebSocket live channel with the frame discipline the server enforces:
// JSON frames {type, seq, payload}, strictly increasing seq per direction.
// The socket factory is injectable so tests can drive a fake socket.

import type { ClientMessage, ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class ProtocolViolation extends Error {}

export class LiveChannel {
  private socket: SocketLike | null = null;
  private outSeq = 0;
  private lastInSeq = 0;
  onMessage: ((msg: ServerMessage) => void) | null = null;
  onClose: (() => void) | null = null;

  constructor(
    private url: string,
    private factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike
  ) {}

  connect(): Promise<void> {
    return new Promise((resolve) => {
      const sock = this.factory(this.url);
      this.socket = sock;
      sock.onopen = () => resolve();
      sock.onmessage = (ev) => this.handleFrame(ev.data);
      sock.onclose = () => {
        this.socket = null;
        this.onClose?.();
      };
    });
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  private handleFrame(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = JSON.parse(raw);
    } catch {
      throw new ProtocolViolation("non-JSON frame from server");
    }
    if (typeof msg.seq !== "number" || msg.seq <= this.lastInSeq) {
      throw new ProtocolViolation(
        `server seq ${msg.seq} not greater than ${this.lastInSeq}`
      );
    }
    this.lastInSeq = msg.seq;
    this.onMessage?.(msg);
  }

  private sendFrame(type: ClientMessage["type"], payload: unknown): number {
    if (!this.socket) throw new Error("live channel not connected");
    this.outSeq += 1;
    this.socket.send(JSON.stringify({ type, seq: this.outSeq, payload }));
    return this.outSeq;
  }

  sendFix(lat: number, lon: number, t: number): number {
    return this.sendFrame("Fix", { lat, lon, t });
  }

  sendCaptureAnswer(durianId: number, questionId: number, answerIndex: number): number {
    return this.sendFrame("CaptureAnswer", {
      durian_id: durianId,
      question_id: questionId,
      answer_index: answerIndex,
    });
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
