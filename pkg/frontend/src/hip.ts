import * as THREE from "three";
import type { Vec3 } from "./protocol.js";

/** Pointer-to-HIP steering on a depth-locked drag plane.
 *
 * The plane passes through a movable anchor and faces the camera; pointer
 * moves unproject onto it, the scroll wheel pushes the anchor along the
 * view axis (the "press" direction). Outgoing set_hip commands are
 * coalesced so rapid pointer streams never exceed the send-rate cap.
 */
export class HipDragController {
  private anchor = new THREE.Vector3();
  private raycaster = new THREE.Raycaster();
  private plane = new THREE.Plane();
  private hit = new THREE.Vector3();
  private pending: Vec3 | null = null;
  private lastSentAt = -Infinity;
  wheelStep: number;
  sent = 0;

  constructor(
    private camera: THREE.Camera,
    private send: (position: Vec3) => void,
    private maxHz = 60,
    wheelStep = 0.005,
  ) {
    this.wheelStep = wheelStep;
  }

  setAnchor(p: Vec3): void {
    this.anchor.set(p[0], p[1], p[2]);
  }

  getAnchor(): Vec3 {
    return [this.anchor.x, this.anchor.y, this.anchor.z];
  }

  /** Unproject a pointer position in normalized device coords onto the
   * drag plane. Returns the world hit (also queued for sending). */
  pointerMove(ndcX: number, ndcY: number, nowMs: number): Vec3 | null {
    const viewDir = new THREE.Vector3();
    this.camera.getWorldDirection(viewDir);
    this.plane.setFromNormalAndCoplanarPoint(viewDir, this.anchor);
    this.raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    const hit = this.raycaster.ray.intersectPlane(this.plane, this.hit);
    if (!hit) return null;
    const pos: Vec3 = [hit.x, hit.y, hit.z];
    this.pending = pos;
    this.maybeFlush(nowMs);
    return pos;
  }

  /** Advance (+) or retract (-) the drag plane along the view axis. */
  wheel(steps: number): void {
    const viewDir = new THREE.Vector3();
    this.camera.getWorldDirection(viewDir);
    this.anchor.addScaledVector(viewDir, steps * this.wheelStep);
    this.pending = this.getAnchor();
  }

  /** Send the freshest pending position if the rate cap allows; called on
   * every pointer event and once per animation frame for the trailing move. */
  maybeFlush(nowMs: number): void {
    if (this.pending === null) return;
    if (nowMs - this.lastSentAt < 1000 / this.maxHz) return;
    this.send(this.pending);
    this.sent += 1;
    this.pending = null;
    this.lastSentAt = nowMs;
  }
}
