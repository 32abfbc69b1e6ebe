export type EventKind =
  | 'load'
  | 'play'
  | 'pause'
  | 'seek'
  | 'rate_change'
  | 'focus'
  | 'blur'
  | 'heartbeat'
  | 'ended';

/** One player interaction as sent to the ingestion endpoint. */
export interface WireEvent {
  event_id: string;
  video_id: string;
  wall_time: string;
  kind: EventKind;
  position_s: number;
  rate: number;
  seek_from_s: number | null;
}

export interface VideoInfo {
  video_id: string;
  title: string;
  duration_s: number;
  published_at: string;
  media_url: string | null;
}

export interface TimelineData {
  video_id: string;
  duration_s: number;
  bin_width_s: number;
  normalized: number[];
  computed_at: string;
  event_horizon: string | null;
}

export interface LoginResult {
  token: string;
  student_id: string;
  role: string;
  course_id: string;
  course_title: string;
}

/** Injectable time source so tests can run scripted journeys. */
export interface Clock {
  nowMs(): number;
}

export const SPEED_CHOICES = [1, 1.25, 1.5, 2] as const;
