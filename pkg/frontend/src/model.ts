/**
 * Viewer state: a mirror of the server's scene document plus the
 * latest displayed frame.
 *
 * Invariants:
 *  - the displayed revision label always matches the displayed frame;
 *  - frames whose revision differs from the current scene revision are
 *    discarded (stale frames from before an edit);
 *  - edits are sent with the last-known revision; on conflict the
 *    mirror re-syncs from the server and the edit is dropped.
 */

import type { PatchResult, ServiceClient } from "./client";
import type { Frame, SceneDocument, ScenePatch } from "./protocol";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ViewerEvents {
  onFrame?: (frame: Frame) => void;
  onScene?: (scene: SceneDocument, revision: number) => void;
  onError?: (message: string) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

export class ViewerModel {
  scene: SceneDocument | null = null;
  revision = 0;
  latestFrame: Frame | null = null;
  status: ConnectionStatus = "connecting";
  droppedStale = 0;

  private inflight: Promise<void> = Promise.resolve();

  constructor(
    private readonly client: ServiceClient,
    private readonly events: ViewerEvents = {},
  ) {}

  async load(): Promise<void> {
    const state = await this.client.getScene();
    this.scene = state.scene;
    this.revision = state.revision;
    this.events.onScene?.(state.scene, state.revision);
  }

  setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.events.onStatus?.(status);
  }

  /** Accept a stream frame; stale revisions are never displayed. */
  receiveFrame(frame: Frame): void {
    if (frame.revision !== this.revision) {
      // frames for a newer revision mean our mirror is behind: re-sync
      if (frame.revision > this.revision) {
        void this.load();
      }
      this.droppedStale += 1;
      return;
    }
    this.latestFrame = frame;
    this.events.onFrame?.(frame);
  }

  /**
   * Send a patch with the last-known revision.  Patches are serialized
   * so a slow response cannot reorder edits.
   */
  sendPatch(patch: ScenePatch): Promise<PatchResult | null> {
    const run = this.inflight.then(() => this.patchNow(patch));
    this.inflight = run.then(() => undefined);
    return run;
  }

  private async patchNow(patch: ScenePatch): Promise<PatchResult | null> {
    try {
      const result = await this.client.patchScene(patch, this.revision);
      if (result.kind === "ok") {
        this.revision = result.revision;
        await this.load();
      } else if (result.kind === "conflict") {
        await this.load(); // drop the edit, mirror the server
        this.events.onError?.("edit conflict: scene reloaded");
      } else {
        await this.load(); // revert optimistic UI state
        this.events.onError?.(`rejected ${result.keyPath}: ${result.error}`);
      }
      return result;
    } catch (err) {
      this.events.onError?.(String(err));
      return null;
    }
  }
}
