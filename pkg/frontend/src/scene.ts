import * as THREE from "three";
import type { HelloFrame, SnapshotFrame } from "./protocol.js";

const FORCE_METERS_PER_NEWTON = 0.01;

/** Scene graph for the haptic view: decimated cloud, proxy sphere, HIP
 * marker, contact-normal line, force arrow, workspace wireframe.
 *
 * Pure scene-state container: `applySnapshot`/`applyCloud` mutate objects,
 * the caller renders. Nothing here computes physics.
 */
export class HapticScene {
  scene = new THREE.Scene();
  cloud: THREE.Points;
  proxy: THREE.Mesh;
  hip: THREE.Mesh;
  normalLine: THREE.Line;
  forceArrow: THREE.ArrowHelper;
  workspace: THREE.LineSegments | null = null;
  private cloudGeometry = new THREE.BufferGeometry();

  constructor() {
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(1, 2, 1.5);
    this.scene.add(sun);

    this.cloud = new THREE.Points(
      this.cloudGeometry,
      new THREE.PointsMaterial({ color: 0x8fc7ff, size: 0.002 }),
    );
    this.scene.add(this.cloud);

    this.proxy = new THREE.Mesh(
      new THREE.SphereGeometry(1, 32, 24),
      new THREE.MeshStandardMaterial({ color: 0xff4fa0, transparent: true, opacity: 0.75 }),
    );
    this.scene.add(this.proxy);

    this.hip = new THREE.Mesh(
      new THREE.SphereGeometry(1, 16, 12),
      new THREE.MeshStandardMaterial({ color: 0xff2222 }),
    );
    this.scene.add(this.hip);

    const lineGeom = new THREE.BufferGeometry().setFromPoints([
      new THREE.Vector3(), new THREE.Vector3(),
    ]);
    this.normalLine = new THREE.Line(
      lineGeom, new THREE.LineBasicMaterial({ color: 0x33ff66 }),
    );
    this.normalLine.visible = false;
    this.scene.add(this.normalLine);

    this.forceArrow = new THREE.ArrowHelper(
      new THREE.Vector3(0, 1, 0), new THREE.Vector3(), 0.01, 0xffcc00,
    );
    this.forceArrow.visible = false;
    this.scene.add(this.forceArrow);
  }

  applyHello(hello: HelloFrame): void {
    if (this.workspace) this.scene.remove(this.workspace);
    const size = [
      hello.lattice_dims[0] * hello.spacing_m,
      hello.lattice_dims[1] * hello.spacing_m,
      hello.lattice_dims[2] * hello.spacing_m,
    ];
    const box = new THREE.BoxGeometry(size[0], size[1], size[2]);
    this.workspace = new THREE.LineSegments(
      new THREE.EdgesGeometry(box),
      new THREE.LineBasicMaterial({ color: 0x444444 }),
    );
    this.workspace.position.set(
      hello.origin_m[0] + size[0] / 2,
      hello.origin_m[1] + size[1] / 2,
      hello.origin_m[2] + size[2] / 2,
    );
    this.scene.add(this.workspace);
    const scale = Math.max(...size);
    this.hip.scale.setScalar(scale * 0.004);
  }

  applyCloud(points: Float32Array): void {
    this.cloudGeometry.setAttribute("position", new THREE.BufferAttribute(points, 3));
    this.cloudGeometry.computeBoundingSphere();
    this.cloudGeometry.attributes.position.needsUpdate = true;
  }

  get cloudPointCount(): number {
    const attr = this.cloudGeometry.getAttribute("position");
    return attr ? attr.count : 0;
  }

  applySnapshot(s: SnapshotFrame): void {
    this.proxy.position.set(s.proxy[0], s.proxy[1], s.proxy[2]);
    this.proxy.scale.setScalar(s.radius);
    this.hip.position.set(s.hip[0], s.hip[1], s.hip[2]);

    const mag = Math.hypot(s.force[0], s.force[1], s.force[2]);
    if (mag > 1e-9) {
      const dir = new THREE.Vector3(s.force[0] / mag, s.force[1] / mag, s.force[2] / mag);
      this.forceArrow.position.copy(this.hip.position);
      this.forceArrow.setDirection(dir);
      this.forceArrow.setLength(Math.max(1e-4, mag * FORCE_METERS_PER_NEWTON));
      this.forceArrow.visible = true;

      // contact direction indicator: the rendered force is anti-parallel to
      // the proxy->HIP offset, so this doubles as the sensed surface normal
      const tip = this.proxy.position.clone().addScaledVector(dir, 2 * s.radius);
      const pos = this.normalLine.geometry.getAttribute("position") as THREE.BufferAttribute;
      pos.setXYZ(0, s.proxy[0], s.proxy[1], s.proxy[2]);
      pos.setXYZ(1, tip.x, tip.y, tip.z);
      pos.needsUpdate = true;
      this.normalLine.visible = true;
    } else {
      this.forceArrow.visible = false;
      this.normalLine.visible = false;
    }
  }

  forceArrowLength(): number {
    return this.forceArrow.visible ? (this.forceArrow.line.scale.y as number) : 0;
  }
}
