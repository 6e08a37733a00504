import { readFileSync } from "node:fs";

export function fixtureRaw(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

export function fixture<T>(name: string): { raw: string; data: T; status: number } {
  const raw = fixtureRaw(name);
  return { raw, data: JSON.parse(raw) as T, status: 200 };
}
