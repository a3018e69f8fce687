import type { CloudFrame, HelloFrame, ServerFrame, SnapshotFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "closed";

/** Everything the viewer knows, all of it received from the bridge. */
export class ViewerState {
  status: ConnectionStatus = "connecting";
  hello: HelloFrame | null = null;
  cloud: Float32Array | null = null;
  cloudRebuildId = -1;
  cloudDirty = false;
  latest: SnapshotFrame | null = null;
  lastError: string | null = null;
  framesSeen = 0;

  apply(frame: ServerFrame): void {
    this.framesSeen += 1;
    switch (frame.type) {
      case "hello":
        this.hello = frame;
        break;
      case "cloud":
        this.cloud = Float32Array.from((frame as CloudFrame).points);
        this.cloudRebuildId = frame.rebuild_id;
        this.cloudDirty = true;
        break;
      case "snapshot":
        this.latest = frame;
        break;
      case "error":
        this.lastError = frame.message;
        break;
    }
  }

  /** World-space center of the haptic workspace, from the hello frame. */
  workspaceCenter(): [number, number, number] | null {
    if (!this.hello) return null;
    const { origin_m, lattice_dims, spacing_m } = this.hello;
    return [
      origin_m[0] + 0.5 * lattice_dims[0] * spacing_m,
      origin_m[1] + 0.5 * lattice_dims[1] * spacing_m,
      origin_m[2] + 0.5 * lattice_dims[2] * spacing_m,
    ];
  }

  workspaceSize(): number {
    if (!this.hello) return 1;
    const { lattice_dims, spacing_m } = this.hello;
    return Math.max(...lattice_dims) * spacing_m;
  }
}
