// Frame types for the bridge WebSocket protocol (see ../protocol.md).
// The viewer renders only what arrives in these frames; it never simulates.

export type Vec3 = [number, number, number];

export interface HelloFrame {
  type: "hello";
  version: number;
  lattice_dims: [number, number, number];
  spacing_m: number;
  origin_m: Vec3;
  active_voxels: number;
  rebuild_id: number;
  rate_hz: number;
  snapshot_hz: number;
  config: {
    stiffness_n_per_m: number;
    mu_s: number;
    mu_d: number;
    friction_enabled: boolean;
    tangent_mode: string;
  };
}

export interface CloudFrame {
  type: "cloud";
  rebuild_id: number;
  count: number;
  points: number[]; // flat x0,y0,z0,x1,...
}

export interface SnapshotFrame {
  type: "snapshot";
  tick: number;
  hip: Vec3;
  proxy: Vec3;
  radius: number;
  contact: "free" | "surface" | "penetrating";
  force: Vec3;
  depth: number;
  friction_scale: number;
  sigma_hat: number;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = HelloFrame | CloudFrame | SnapshotFrame | ErrorFrame;

export type TransformOp =
  | { scale: number | Vec3 }
  | { rotate: { axis: Vec3; angle_deg: number } }
  | { translate_m: Vec3 };

export type ClientCommand =
  | { type: "set_hip"; position: Vec3 }
  | { type: "set_transform"; ops: TransformOp[] }
  | { type: "set_friction"; mu_s: number; mu_d: number; enabled: boolean }
  | { type: "reset" };

const isVec3 = (v: unknown): v is Vec3 =>
  Array.isArray(v) && v.length === 3 && v.every((x) => Number.isFinite(x));

/** Parse one server frame; returns null for anything malformed or unknown. */
export function parseServerFrame(text: string): ServerFrame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const f = raw as Record<string, unknown>;
  switch (f.type) {
    case "hello":
      if (typeof f.spacing_m === "number" && Array.isArray(f.lattice_dims)) {
        return f as unknown as HelloFrame;
      }
      return null;
    case "cloud":
      if (typeof f.count === "number" && Array.isArray(f.points) &&
          f.points.length === 3 * (f.count as number)) {
        return f as unknown as CloudFrame;
      }
      return null;
    case "snapshot":
      if (isVec3(f.hip) && isVec3(f.proxy) && isVec3(f.force) &&
          typeof f.radius === "number" && typeof f.tick === "number") {
        return f as unknown as SnapshotFrame;
      }
      return null;
    case "error":
      return typeof f.message === "string" ? (f as unknown as ErrorFrame) : null;
    default:
      return null;
  }
}

export function encodeCommand(cmd: ClientCommand): string {
  return JSON.stringify(cmd);
}
