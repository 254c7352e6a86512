// Latest-wins request scheduling. Each pane owns one scheduler: slider
// drags collapse into the trailing request after a short debounce, at most
// one request is in flight at a time, and when newer work arrives while a
// request runs, only the newest runs afterwards. Results from superseded
// requests are dropped so the pane never flashes stale images.

export type Task<T> = () => Promise<T>;

export class LatestWins<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pendingTask: Task<T> | null = null;
  private inFlight = false;
  private generation = 0;

  constructor(
    private readonly debounceMs: number,
    private readonly onResult: (value: T) => void,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  /** Queue `task`; earlier queued-but-unstarted tasks are discarded. */
  schedule(task: Task<T>): void {
    this.pendingTask = task;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.launch();
    }, this.debounceMs);
  }

  /** Run `task` immediately (still latest-wins against in-flight work). */
  scheduleNow(task: Task<T>): void {
    this.pendingTask = task;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    void this.launch();
  }

  private async launch(): Promise<void> {
    if (this.inFlight || this.pendingTask === null) return;
    const task = this.pendingTask;
    this.pendingTask = null;
    const myGeneration = ++this.generation;
    this.inFlight = true;
    try {
      const value = await task();
      // superseded results (newer queued or already relaunched) are dropped
      if (myGeneration === this.generation && this.pendingTask === null) {
        this.onResult(value);
      }
    } catch (err) {
      if (myGeneration === this.generation && this.pendingTask === null) {
        this.onError(err);
      }
    } finally {
      this.inFlight = false;
      if (this.pendingTask !== null) void this.launch();
    }
  }
}
