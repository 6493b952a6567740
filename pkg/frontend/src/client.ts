/** Promise-based gateway client over one websocket.
 *
 * Requests are correlated by req_id; notification frames are handed to the
 * store. The socket constructor is injectable so tests can drive the client
 * from Node with the `ws` package.
 */

import type { Notification, Reply } from "./protocol";

// Structural common ground of the browser WebSocket and the `ws` package;
// handler parameters are `any` so both event hierarchies satisfy it.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ClientStatus = "connecting" | "open" | "closed";

export class GatewayError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

interface Pending {
  resolve: (result: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class GatewayClient {
  onNotification: (frame: Notification) => void = () => {};
  onStatus: (status: ClientStatus) => void = () => {};

  private socket: SocketLike | null = null;
  private nextReq = 1;
  private pending = new Map<number, Pending>();
  private status: ClientStatus = "closed";

  constructor(private url: string, private makeSocket: SocketFactory) {}

  connect(): Promise<void> {
    this.setStatus("connecting");
    return new Promise((resolve, reject) => {
      const socket = this.makeSocket(this.url);
      this.socket = socket;
      socket.onopen = () => {
        this.setStatus("open");
        resolve();
      };
      socket.onmessage = (ev) => this.handleFrame(String(ev.data));
      socket.onerror = () => {
        if (this.status === "connecting") reject(new Error(`cannot connect to ${this.url}`));
      };
      socket.onclose = () => {
        this.setStatus("closed");
        for (const [, p] of this.pending) p.reject(new Error("connection closed"));
        this.pending.clear();
      };
    });
  }

  close(): void {
    this.socket?.close();
  }

  get connected(): boolean {
    return this.status === "open";
  }

  call(method: string, payload: Record<string, unknown> = {}): Promise<Record<string, unknown>> {
    if (!this.socket || this.status !== "open") {
      return Promise.reject(new Error("not connected"));
    }
    const req_id = this.nextReq++;
    const frame = JSON.stringify({ req_id, method, payload });
    return new Promise((resolve, reject) => {
      this.pending.set(req_id, { resolve, reject });
      this.socket!.send(frame);
    });
  }

  private handleFrame(data: string): void {
    let frame: unknown;
    try {
      frame = JSON.parse(data);
    } catch {
      return;
    }
    if (frame === null || typeof frame !== "object") return;
    if ("notify" in frame) {
      this.onNotification(frame as Notification);
      return;
    }
    const reply = frame as Reply;
    const pending = this.pending.get(reply.req_id);
    if (!pending) return;
    this.pending.delete(reply.req_id);
    if (reply.ok) {
      pending.resolve(reply.result);
    } else {
      pending.reject(new GatewayError(reply.error, reply.message));
    }
  }

  private setStatus(status: ClientStatus): void {
    this.status = status;
    this.onStatus(status);
  }
}
