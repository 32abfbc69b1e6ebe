import { ApiClient, AuthRequiredError } from './api.js';
import { PlayerPanel } from './player.js';
import type { VideoInfo } from './types.js';

/**
 * Page shell: course login, then the video list on the left and the
 * playback panel with its usage contour on the right.
 */
export class App {
  private api: ApiClient | null = null;
  private panel: PlayerPanel | null = null;

  constructor(private readonly root: HTMLElement) {}

  start(): void {
    this.renderLogin();
  }

  private renderLogin(message = ''): void {
    this.root.innerHTML = `
      <div class="login">
        <h1>Course videos</h1>
        <form>
          <label>Course id <input name="course" required value="default"></label>
          <label>Student email <input name="email" type="email" required></label>
          <label>Course code <input name="code" required minlength="8" maxlength="8"
                 placeholder="8 characters"></label>
          <button type="submit">Log in</button>
        </form>
        <p class="error">${message}</p>
      </div>
    `;
    const form = this.root.querySelector('form') as HTMLFormElement;
    form.addEventListener('submit', async (event) => {
      event.preventDefault();
      const data = new FormData(form);
      const api = new ApiClient('', String(data.get('course')));
      try {
        await api.login(String(data.get('email')), String(data.get('code')));
        this.api = api;
        await this.renderWorkspace();
      } catch (err) {
        this.renderLogin(err instanceof Error ? err.message : 'login failed');
      }
    });
  }

  private async renderWorkspace(): Promise<void> {
    if (!this.api) {
      return;
    }
    this.root.innerHTML = `
      <div class="workspace">
        <aside class="sidebar"><h2>Videos</h2><ul class="video-list"></ul></aside>
        <main class="player-area"></main>
      </div>
    `;
    this.panel = new PlayerPanel(
      this.root.querySelector('.player-area') as HTMLElement,
      this.api,
    );
    try {
      const videos = await this.api.listVideos();
      this.renderVideoList(videos);
    } catch (err) {
      if (err instanceof AuthRequiredError) {
        this.renderLogin('session expired; log in again');
        return;
      }
      throw err;
    }
  }

  private renderVideoList(videos: VideoInfo[]): void {
    const list = this.root.querySelector('.video-list') as HTMLElement;
    list.innerHTML = '';
    for (const video of videos) {
      const item = document.createElement('li');
      const link = document.createElement('a');
      link.href = '#';
      link.textContent = `${video.title} (${formatDuration(video.duration_s)})`;
      link.addEventListener('click', async (event) => {
        event.preventDefault();
        try {
          await this.panel?.open(video);
        } catch (err) {
          if (err instanceof AuthRequiredError) {
            this.renderLogin('session expired; log in again');
          } else {
            throw err;
          }
        }
      });
      item.appendChild(link);
      list.appendChild(item);
    }
    if (videos.length === 0) {
      list.innerHTML = '<li class="empty">No videos published yet.</li>';
    }
  }
}

function formatDuration(seconds: number): string {
  const minutes = Math.floor(seconds / 60);
  const rest = Math.floor(seconds % 60);
  return `${minutes}:${String(rest).padStart(2, '0')}`;
}
