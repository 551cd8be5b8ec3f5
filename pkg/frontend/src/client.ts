/** WebSocket session client: latest-snapshot buffer (stale frames dropped),
 * reconnect prompts on unexpected drops, refusal surfaced clearly. */
import type { ServerMessage, Snapshot, HelloMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";

export type ConnectionState =
  | "connecting" | "live" | "refused" | "dropped" | "ended";

export interface ClientCallbacks {
  onState?: (state: ConnectionState, detail?: string) => void;
  onHello?: (hello: HelloMessage) => void;
  onEvent?: (event: ServerMessage) => void;
}

/** Structural view of a WebSocket (browser or `ws` package). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (ev: any) => void): void;
}

export class CockpitClient {
  latest: Snapshot | null = null;
  hello: HelloMessage | null = null;
  state: ConnectionState = "connecting";
  byeReason: string | null = null;

  constructor(private socket: SocketLike,
              private callbacks: ClientCallbacks = {}) {
    socket.addEventListener("open", () => this.setState("live"));
    socket.addEventListener("message", (ev: { data: unknown }) =>
      this.handleFrame(String(ev.data)));
    socket.addEventListener("close", () => {
      if (this.state === "live") this.setState("dropped",
        "connection lost; refresh to reconnect");
      else if (this.state === "connecting") this.setState("refused",
        "server unreachable");
    });
    socket.addEventListener("error", () => { /* close handler reports */ });
  }

  handleFrame(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(raw);
    } catch {
      return; // tolerate unknown frames from newer servers
    }
    switch (msg.t) {
      case "hello":
        this.hello = msg;
        this.callbacks.onHello?.(msg);
        break;
      case "state":
        this.latest = msg; // render loop reads only the newest
        break;
      case "event":
        this.callbacks.onEvent?.(msg);
        break;
      case "error":
        if (msg.msg.includes("operator")) {
          this.setState("refused", msg.msg);
          this.socket.close();
        }
        this.callbacks.onEvent?.(msg);
        break;
      case "bye":
        this.byeReason = msg.reason;
        this.setState("ended", msg.reason);
        break;
    }
  }

  send(data: string): void {
    this.socket.send(data);
  }

  private setState(state: ConnectionState, detail?: string): void {
    this.state = state;
    this.callbacks.onState?.(state, detail);
  }
}
