/**
 * HTTP client for the render service: scene fetch, optimistic-revision
 * patches, health, and snapshots.
 */

import type { Health, SceneDocument, ScenePatch } from "./protocol";

export interface SceneState {
  scene: SceneDocument;
  revision: number;
}

export type PatchResult =
  | { kind: "ok"; revision: number }
  | { kind: "conflict"; revision: number }
  | { kind: "invalid"; keyPath: string; error: string };

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  json(): Promise<unknown>;
}>;

export class ServiceClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async getScene(): Promise<SceneState> {
    const res = await this.fetchFn(`${this.baseUrl}/api/scene`);
    if (res.status !== 200) {
      throw new Error(`GET /api/scene failed: ${res.status}`);
    }
    return (await res.json()) as SceneState;
  }

  async patchScene(patch: ScenePatch, revision: number): Promise<PatchResult> {
    const res = await this.fetchFn(`${this.baseUrl}/api/scene`, {
      method: "PATCH",
      headers: {
        "Content-Type": "application/json",
        "If-Match": String(revision),
      },
      body: JSON.stringify(patch),
    });
    const body = (await res.json()) as Record<string, unknown>;
    if (res.status === 200) {
      return { kind: "ok", revision: body.revision as number };
    }
    if (res.status === 409) {
      return { kind: "conflict", revision: body.revision as number };
    }
    if (res.status === 422) {
      return {
        kind: "invalid",
        keyPath: (body.key_path as string) ?? "",
        error: (body.error as string) ?? "invalid value",
      };
    }
    throw new Error(`PATCH /api/scene failed: ${res.status}`);
  }

  async health(): Promise<Health> {
    const res = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (res.status !== 200) {
      throw new Error(`GET /api/health failed: ${res.status}`);
    }
    return (await res.json()) as Health;
  }

  snapshotUrl(format: "png" | "pfm"): string {
    return `${this.baseUrl}/api/snapshot?format=${format}`;
  }
}
