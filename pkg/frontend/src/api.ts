import type { LoginResult, TimelineData, VideoInfo, WireEvent } from './types.js';

/** Thin fetch wrapper around the course API. */
export class ApiClient {
  private token: string | null = null;

  constructor(private readonly baseUrl: string, private readonly courseId: string) {}

  setToken(token: string): void {
    this.token = token;
  }

  async login(email: string, code: string): Promise<LoginResult> {
    const result = await this.request<LoginResult>('POST', '/login', { email, code });
    this.token = result.token;
    return result;
  }

  listVideos(): Promise<VideoInfo[]> {
    return this.request<VideoInfo[]>('GET', '/videos');
  }

  fetchTimeline(videoId: string): Promise<TimelineData> {
    return this.request<TimelineData>('GET', `/videos/${encodeURIComponent(videoId)}/timeline`);
  }

  async postEvents(events: WireEvent[]): Promise<{ accepted: number }> {
    return this.request<{ accepted: number }>('POST', '/events', { events });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    const response = await fetch(`${this.baseUrl}/api/courses/${this.courseId}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 401) {
      throw new AuthRequiredError();
    }
    if (!response.ok) {
      const detail = await response.text();
      throw new Error(`${method} ${path} failed (${response.status}): ${detail}`);
    }
    return (await response.json()) as T;
  }
}

export class AuthRequiredError extends Error {
  constructor() {
    super('session expired; log in again');
  }
}
