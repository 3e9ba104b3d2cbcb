import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf8")) as T;
}

export interface RecordedCall {
  url: string;
  body: unknown;
}

/** A fetch double backed by fixture responses, recording every call. */
export function fixtureFetch(routes: Record<string, unknown>,
                             calls: RecordedCall[] = []):
    { fetch: FetchLike; calls: RecordedCall[] } {
  const impl: FetchLike = async (url, init) => {
    const path = url.split("?")[0]!;
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ url, body });
    if (!(path in routes)) {
      return { ok: false, status: 404, json: async () => ({}) };
    }
    const route = routes[path];
    const payload = typeof route === "function"
      ? (route as (b: unknown, u: string) => unknown)(body, url)
      : route;
    return { ok: true, status: 200, json: async () => payload };
  };
  return { fetch: impl, calls };
}
