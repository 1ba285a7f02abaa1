/**
 * Scene rendering with three.js: room objects are GLB assets loaded
 * from the server, remote participants render as simplified avatars
 * (a head block and hand blocks tinted by their palette color), and
 * replicated transforms are smoothed by clamped interpolation over one
 * broadcast tick.
 */

import * as THREE from "three";
import { GLTFLoader } from "three/addons/loaders/GLTFLoader.js";

import { TransformInterpolator } from "./interpolate.js";
import { AvatarPose, Transform } from "./protocol.js";
import { RoomStateView } from "./state.js";

export const TICK_INTERVAL_S = 1 / 20;

export const AVATAR_PALETTE = [
  0xe6194b, 0x3cb44b, 0xffe119, 0x4363d8,
  0xf58231, 0x911eb4, 0x46f0f0, 0xf032e6,
];

function applyTransform(target: THREE.Object3D, t: Transform): void {
  target.position.set(t.position.x, t.position.y, t.position.z);
  target.quaternion.set(t.orientation.x, t.orientation.y, t.orientation.z, t.orientation.w);
  target.scale.setScalar(t.scale);
}

class AvatarNode {
  readonly group = new THREE.Group();
  private readonly head: THREE.Mesh;
  private readonly left: THREE.Mesh;
  private readonly right: THREE.Mesh;

  constructor(colorIndex: number) {
    const color = AVATAR_PALETTE[colorIndex % AVATAR_PALETTE.length];
    const material = new THREE.MeshStandardMaterial({ color, roughness: 0.5 });
    this.head = new THREE.Mesh(new THREE.BoxGeometry(0.18, 0.22, 0.14), material);
    this.left = new THREE.Mesh(new THREE.BoxGeometry(0.07, 0.07, 0.12), material);
    this.right = new THREE.Mesh(new THREE.BoxGeometry(0.07, 0.07, 0.12), material);
    this.group.add(this.head, this.left, this.right);
  }

  update(pose: AvatarPose): void {
    this.head.position.set(pose.head.position.x, pose.head.position.y, pose.head.position.z);
    this.head.quaternion.set(pose.head.orientation.x, pose.head.orientation.y,
                             pose.head.orientation.z, pose.head.orientation.w);
    for (const [mesh, hand] of [[this.left, pose.leftHand],
                                [this.right, pose.rightHand]] as const) {
      mesh.visible = hand !== null;
      if (hand) {
        mesh.position.set(hand.position.x, hand.position.y, hand.position.z);
        mesh.quaternion.set(hand.orientation.x, hand.orientation.y,
                            hand.orientation.z, hand.orientation.w);
      }
    }
  }
}

export class SceneRenderer {
  readonly scene = new THREE.Scene();
  readonly camera = new THREE.PerspectiveCamera(70, 1, 0.05, 100);
  readonly renderer: THREE.WebGLRenderer;
  private readonly loader = new GLTFLoader();
  private readonly objectNodes = new Map<number, THREE.Group>();
  private readonly objectUrls = new Map<number, string>();
  private readonly avatarNodes = new Map<number, AvatarNode>();
  private readonly interpolators = new Map<string, TransformInterpolator>();
  /** Objects this client holds render from local state, not the network. */
  locallyHeld = new Set<number>();

  constructor(canvas: HTMLCanvasElement, private readonly serverUrl: string) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.xr.enabled = true;
    this.scene.background = new THREE.Color(0x101018);
    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x404050, 1.0));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, 4, 1);
    this.scene.add(sun);
    const floor = new THREE.Mesh(
      new THREE.CircleGeometry(6, 48).rotateX(-Math.PI / 2),
      new THREE.MeshStandardMaterial({ color: 0x202028, roughness: 0.9 }));
    this.scene.add(floor);
  }

  resize(width: number, height: number): void {
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(width, height, false);
  }

  private interpolator(key: string): TransformInterpolator {
    let interp = this.interpolators.get(key);
    if (!interp) {
      interp = new TransformInterpolator(TICK_INTERVAL_S);
      this.interpolators.set(key, interp);
    }
    return interp;
  }

  /** Feed the latest network sample for smoothing. */
  pushObjectSample(objectId: number, t: Transform, now: number): void {
    this.interpolator(`o${objectId}`).push(t, now);
  }

  /** Reconcile the scene graph with the room state store. */
  sync(state: RoomStateView, selfId: number | null, now: number): void {
    for (const [oid, obj] of state.objects) {
      let node = this.objectNodes.get(oid);
      if (!node) {
        node = new THREE.Group();
        this.objectNodes.set(oid, node);
        this.scene.add(node);
        this.loadAsset(oid, obj.assetUrl, node);
      }
      const smoothed = this.locallyHeld.has(oid)
        ? obj.transform
        : this.interpolator(`o${oid}`).sample(now) ?? obj.transform;
      applyTransform(node, smoothed);
    }
    for (const [oid, node] of this.objectNodes) {
      if (!state.objects.has(oid)) {
        this.scene.remove(node);
        this.objectNodes.delete(oid);
      }
    }
    for (const [pid, participant] of state.participants) {
      if (pid === selfId) continue;
      let avatar = this.avatarNodes.get(pid);
      if (!avatar) {
        avatar = new AvatarNode(participant.colorIndex);
        this.avatarNodes.set(pid, avatar);
        this.scene.add(avatar.group);
      }
      if (participant.pose) avatar.update(participant.pose);
    }
    for (const [pid, avatar] of this.avatarNodes) {
      if (!state.participants.has(pid) || pid === selfId) {
        this.scene.remove(avatar.group);
        this.avatarNodes.delete(pid);
      }
    }
  }

  private loadAsset(objectId: number, url: string, into: THREE.Group): void {
    if (this.objectUrls.get(objectId) === url) return;
    this.objectUrls.set(objectId, url);
    const absolute = url.startsWith("/") ? this.serverUrl.replace(/\/$/, "") + url : url;
    this.loader.load(absolute, (gltf) => {
      into.clear();
      into.add(gltf.scene);
    }, undefined, (err) => {
      console.warn(`asset ${url} failed to load`, err);
    });
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
