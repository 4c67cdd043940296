// Thin REST client for the game server. The fetch function is injectable so
// tests can run without a network.

import type {
  LeaderboardEntry,
  MaskVerdict,
  SessionSummary,
} from "./protocol.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ ok: boolean; status: number; json(): Promise<any> }>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string
  ) {
    super(message);
  }
}

export interface ShopItem {
  item_id: string;
  name: string;
  cost: number;
  stock: number | null;
}

export class ApiClient {
  token: string | null = null;

  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const res = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = await res.json().catch(() => ({}));
    if (!res.ok) {
      const detail = doc?.detail ?? {};
      throw new ApiError(
        res.status,
        detail.code ?? "HTTP_ERROR",
        detail.message ?? `request failed with status ${res.status}`
      );
    }
    return doc;
  }

  async register(email: string, password: string, displayName: string): Promise<string> {
    const doc = await this.request("POST", "/auth/register", {
      email,
      password,
      display_name: displayName,
    });
    return doc.player_id;
  }

  async login(email: string, password: string): Promise<string> {
    const doc = await this.request("POST", "/auth/login", { email, password });
    this.token = doc.token;
    return doc.token;
  }

  async gateMask(landmarks: Record<string, { confidence: number }>): Promise<MaskVerdict> {
    return this.request("POST", "/gate/mask", { landmarks });
  }

  async startSession(
    center: { lat: number; lon: number },
    verdictId: string
  ): Promise<SessionSummary> {
    return this.request("POST", "/session/start", {
      center,
      verdict_id: verdictId,
    });
  }

  async getSession(): Promise<SessionSummary> {
    return this.request("GET", "/session");
  }

  async respawn(durianId: number): Promise<SessionSummary> {
    return this.request("POST", `/session/respawn/${durianId}`);
  }

  async leaderboard(top = 10): Promise<LeaderboardEntry[]> {
    const doc = await this.request("GET", `/leaderboard?top=${top}`);
    return doc.entries;
  }

  async shopItems(): Promise<ShopItem[]> {
    const doc = await this.request("GET", "/shop/items");
    return doc.items;
  }

  async purchase(itemId: string): Promise<{ points_total: number }> {
    return this.request("POST", "/shop/purchase", { item_id: itemId });
  }
}
