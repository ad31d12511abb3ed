// Token-bucket rate limiter for outgoing set_param messages.

export class RateLimiter {
  private tokens: number;
  private lastRefill: number;

  constructor(
    private readonly perSecond: number,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.tokens = perSecond;
    this.lastRefill = this.now();
  }

  /** Consume one token if available; false means "too fast, drop it". */
  tryAcquire(): boolean {
    const t = this.now();
    const elapsed = (t - this.lastRefill) / 1000;
    if (elapsed > 0) {
      this.tokens = Math.min(this.perSecond, this.tokens + elapsed * this.perSecond);
      this.lastRefill = t;
    }
    if (this.tokens >= 1) {
      this.tokens -= 1;
      return true;
    }
    return false;
  }
}
