/** Deterministic display shuffling.
 *
 * Cards are dealt in a fresh order every time a batch is shown so that a
 * card's position on screen carries no information about the order the
 * server generated it in. The shuffle is seeded to keep renders stable
 * within one display (and reproducible in tests); the seed changes per
 * batch, not per repaint.
 */

/** Small fast PRNG over a 32-bit state; plenty for dealing cards. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let mixed = state;
    mixed = Math.imul(mixed ^ (mixed >>> 15), mixed | 1);
    mixed ^= mixed + Math.imul(mixed ^ (mixed >>> 7), mixed | 61);
    return ((mixed ^ (mixed >>> 14)) >>> 0) / 4294967296;
  };
}

/** Fisher-Yates over a copy; the input array is never touched. */
export function shuffled<T>(items: readonly T[], seed: number): T[] {
  const dealt = [...items];
  const next = mulberry32(seed);
  for (let i = dealt.length - 1; i > 0; i -= 1) {
    const j = Math.floor(next() * (i + 1));
    const held = dealt[i] as T;
    dealt[i] = dealt[j] as T;
    dealt[j] = held;
  }
  return dealt;
}
