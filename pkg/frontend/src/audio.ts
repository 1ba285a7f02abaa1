/**
 * Peer audio mesh. The server only relays opaque signaling text
 * between participants, and only from Admin or VR-active senders;
 * media flows peer to peer. Because passive guests cannot send any
 * signaling through the relay, WebRTC handshakes are only possible
 * between talkers: the mesh links every talking pair, with the smaller
 * participant id making the offer so each pair negotiates exactly one
 * connection.
 */

import { Role } from "./protocol.js";

export interface SignalEnvelope {
  from: number;
  type: "offer" | "answer" | "candidate";
  sdp?: string;
  candidate?: unknown;
}

export function canTalk(role: Role): boolean {
  return role === "admin" || role === "vr_active";
}

/**
 * Should `self` initiate the audio link to `other`? Only talker pairs
 * can complete a handshake over the role-gated relay; ties break
 * toward the smaller id.
 */
export function shouldInitiate(selfId: number, selfRole: Role,
                               otherId: number, otherRole: Role): boolean {
  if (selfId === otherId) return false;
  return canTalk(selfRole) && canTalk(otherRole) && selfId < otherId;
}

export interface AudioSignalSender {
  (toParticipant: number, payload: string): void;
}

export class AudioMesh {
  private peers = new Map<number, RTCPeerConnection>();
  private localStream: MediaStream | null = null;
  private muted = false;

  constructor(private readonly selfId: number,
              private readonly selfRole: Role,
              private readonly sendSignal: AudioSignalSender,
              private readonly onRemoteTrack: (pid: number, stream: MediaStream) => void) {}

  async enableMicrophone(): Promise<boolean> {
    if (!canTalk(this.selfRole)) return false;
    try {
      this.localStream = await navigator.mediaDevices.getUserMedia({ audio: true });
      return true;
    } catch {
      // permission denied: the session continues without outbound audio
      this.localStream = null;
      return false;
    }
  }

  /** Mute toggle for co-located setups; signaling stays up. */
  setMuted(muted: boolean): void {
    this.muted = muted;
    for (const track of this.localStream?.getAudioTracks() ?? []) {
      track.enabled = !muted;
    }
  }

  get isMuted(): boolean {
    return this.muted;
  }

  private peerFor(pid: number): RTCPeerConnection {
    let pc = this.peers.get(pid);
    if (pc) return pc;
    pc = new RTCPeerConnection();
    this.peers.set(pid, pc);
    if (this.localStream) {
      for (const track of this.localStream.getTracks()) pc.addTrack(track, this.localStream);
    }
    pc.onicecandidate = (e) => {
      if (e.candidate) {
        this.signal(pid, { from: this.selfId, type: "candidate",
                           candidate: e.candidate.toJSON() });
      }
    };
    pc.ontrack = (e) => {
      if (e.streams[0]) this.onRemoteTrack(pid, e.streams[0]);
    };
    return pc;
  }

  private signal(pid: number, envelope: SignalEnvelope): void {
    this.sendSignal(pid, JSON.stringify(envelope));
  }

  async connectTo(pid: number, role: Role): Promise<void> {
    if (!shouldInitiate(this.selfId, this.selfRole, pid, role)) return;
    const pc = this.peerFor(pid);
    const offer = await pc.createOffer({ offerToReceiveAudio: true });
    await pc.setLocalDescription(offer);
    this.signal(pid, { from: this.selfId, type: "offer", sdp: offer.sdp });
  }

  async handleSignal(payload: string): Promise<void> {
    let envelope: SignalEnvelope;
    try {
      envelope = JSON.parse(payload);
    } catch {
      return;
    }
    // replying needs relay rights; a passive recipient stays silent
    if (!canTalk(this.selfRole)) return;
    const pc = this.peerFor(envelope.from);
    if (envelope.type === "offer" && envelope.sdp) {
      await pc.setRemoteDescription({ type: "offer", sdp: envelope.sdp });
      const answer = await pc.createAnswer();
      await pc.setLocalDescription(answer);
      this.signal(envelope.from, { from: this.selfId, type: "answer", sdp: answer.sdp });
    } else if (envelope.type === "answer" && envelope.sdp) {
      await pc.setRemoteDescription({ type: "answer", sdp: envelope.sdp });
    } else if (envelope.type === "candidate" && envelope.candidate) {
      await pc.addIceCandidate(envelope.candidate as RTCIceCandidateInit);
    }
  }

  dropPeer(pid: number): void {
    this.peers.get(pid)?.close();
    this.peers.delete(pid);
  }

  closeAll(): void {
    for (const pc of this.peers.values()) pc.close();
    this.peers.clear();
    for (const track of this.localStream?.getTracks() ?? []) track.stop();
  }
}
