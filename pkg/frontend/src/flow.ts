import { ApiError, VirtdocApi } from "./api.js";
import { heightFrame, validateMeasurement, weightFrame } from "./frames.js";
import { Report, SessionDetail, SessionState } from "./types.js";

export const MEASURE_WEIGHT = "MeasureWeight";
export const MEASURE_HEIGHT = "MeasureHeight";

export interface FlowState {
  session: SessionState | null;
  detail: SessionDetail | null;
  report: Report | null;
  notice: string | null; // retry / validation / handover text
  error: string | null; // service unreachable etc.
}

/**
 * Drives one kiosk session. Holds no medical logic: stages, probabilities,
 * and the decision are always whatever the service last said.
 */
export class SessionFlow {
  state: FlowState = { session: null, detail: null, report: null, notice: null, error: null };

  constructor(readonly api: VirtdocApi) {}

  get stage(): string | null {
    return this.state.session?.stage ?? null;
  }

  get atMeasurement(): boolean {
    return this.stage === MEASURE_WEIGHT || this.stage === MEASURE_HEIGHT;
  }

  get done(): boolean {
    return this.state.session?.done ?? false;
  }

  async start(): Promise<void> {
    try {
      this.state.session = await this.api.createSession();
      this.state.notice = null;
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
  }

  async answer(text: string): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const before = session.retry_count;
    await this.apply(() => this.api.sendUtterance(session.session_id, text), before);
  }

  /** Posts the scale frame, then (if accepted) the ultrasonic frame. */
  async measure(weightKg: number, heightM: number): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const invalid = validateMeasurement(weightKg, heightM);
    if (invalid) {
      this.state.notice = invalid;
      return;
    }
    if (this.stage === MEASURE_WEIGHT) {
      const before = session.retry_count;
      await this.apply(() => this.api.sendFrame(session.session_id, weightFrame(weightKg)), before);
    }
    if (this.stage === MEASURE_HEIGHT && this.state.session && !this.state.notice) {
      const before = this.state.session.retry_count;
      await this.apply(() => this.api.sendFrame(session.session_id, heightFrame(heightM)), before);
    }
  }

  /** Polling refresh: re-read the full session from the service. */
  async refresh(): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    try {
      const detail = await this.api.getSession(session.session_id);
      this.state.detail = detail;
      this.state.session = {
        schema_version: detail.schema_version,
        session_id: detail.session_id,
        stage: detail.stage,
        prompt: detail.prompt,
        retry_count: detail.retry_counts[detail.stage] ?? 0,
        needs_handover: detail.needs_handover,
        done: detail.stage === "Done",
        base_probability: detail.base_probability,
        adjusted_probability: detail.adjusted_probability,
        decision: detail.decision,
      };
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
  }

  /** Fetch the final report; a mid-flight session is not an error. */
  async loadReport(): Promise<"ready" | "in_progress" | "error"> {
    const session = this.state.session;
    if (!session) return "error";
    try {
      this.state.report = await this.api.getReport(session.session_id);
      return "ready";
    } catch (err) {
      if (err instanceof ApiError && err.code === "conflict") {
        this.state.notice = "Assessment still in progress.";
        return "in_progress";
      }
      this.state.error = err instanceof Error ? err.message : String(err);
      return "error";
    }
  }

  private async apply(send: () => Promise<SessionState>, retriesBefore: number): Promise<void> {
    try {
      const updated = await send();
      this.state.session = updated;
      this.state.error = null;
      if (updated.needs_handover) {
        this.state.notice = "I could not understand the answers. A human will take over from here.";
      } else if (updated.retry_count > retriesBefore) {
        this.state.notice = "The last answer was not understood; please try again.";
      } else {
        this.state.notice = null;
      }
    } catch (err) {
      if (err instanceof ApiError && err.code === "conflict") {
        // retry limit tripped or session finished elsewhere; ask the service
        await this.refresh();
        this.state.notice = this.state.session?.needs_handover
          ? "I could not understand the answers. A human will take over from here."
          : err.message;
        return;
      }
      this.state.error = err instanceof Error ? err.message : String(err);
    }
  }
}
