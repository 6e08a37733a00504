// Raw-token extraction from service JSON text. The console never reformats a
// number it displays: it lifts the literal token out of the response bytes,
// so what the operator reads is exactly what the service serialized.

const WS = new Set([" ", "\t", "\n", "\r"]);

function skipWs(text: string, i: number): number {
  while (i < text.length && WS.has(text[i]!)) i += 1;
  return i;
}

/** Return the literal scalar token starting at index i (number, null, bool). */
function scalarToken(text: string, i: number): string | null {
  const start = skipWs(text, i);
  const m = /^(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|null|true|false)/.exec(text.slice(start, start + 64));
  return m ? m[1]! : null;
}

/**
 * Every literal value token following `"key":` in the raw text, in order of
 * appearance. Works for scalar-valued keys; nested objects are not needed
 * because all displayed metrics are flat.
 */
export function rawValueTokens(raw: string, key: string): string[] {
  const needle = `"${key}"`;
  const out: string[] = [];
  let i = 0;
  for (;;) {
    const at = raw.indexOf(needle, i);
    if (at < 0) break;
    let j = skipWs(raw, at + needle.length);
    if (raw[j] === ":") {
      const tok = scalarToken(raw, j + 1);
      if (tok !== null) out.push(tok);
    }
    i = at + needle.length;
  }
  return out;
}

/** First raw token for a key, or null when absent. */
export function rawValueToken(raw: string, key: string): string | null {
  const all = rawValueTokens(raw, key);
  return all.length > 0 ? all[0]! : null;
}
