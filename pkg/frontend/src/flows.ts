/**
 * Enrollment and verification flows.
 *
 * The enrollment flow walks the signer through 3 captures tagged session 1
 * and 2 tagged session 2; moving to session 2 is an explicit user action.
 * Progress is never tracked locally: after every submission the state shown
 * to the user is whatever the service reports.
 */

import { EnrollResponse, UserStatus, VerifyResult } from "./api.js";
import { CaptureStream } from "./capture.js";
import { exportSvc } from "./svc.js";

/** The slice of the service API the flows need; ApiClient satisfies it. */
export interface VerificationApi {
  status(userId: string): Promise<UserStatus>;
  enroll(userId: string, session: 1 | 2, svc: string): Promise<EnrollResponse>;
  verify(userId: string, svc: string): Promise<VerifyResult>;
}

export class EnrollFlow {
  currentSession: 1 | 2 = 1;
  lastStatus: UserStatus | null = null;

  constructor(
    private readonly api: VerificationApi,
    readonly userId: string,
  ) {}

  async refresh(): Promise<UserStatus | null> {
    try {
      this.lastStatus = await this.api.status(this.userId);
    } catch (err) {
      // A user the service has never seen is simply at zero progress.
      if ((err as { code?: string }).code === "UnknownUser") {
        this.lastStatus = null;
      } else {
        throw err;
      }
    }
    return this.lastStatus;
  }

  /** Counts as reported by the service; zeros before first contact. */
  progress(): { session1: number; session2: number; trained: boolean } {
    if (!this.lastStatus) {
      return { session1: 0, session2: 0, trained: false };
    }
    return {
      session1: this.lastStatus.counts.session1.have,
      session2: this.lastStatus.counts.session2.have,
      trained: this.lastStatus.trained,
    };
  }

  advanceToSession2(): void {
    this.currentSession = 2;
  }

  async submit(stream: CaptureStream): Promise<UserStatus | null> {
    const svc = exportSvc(stream);
    await this.api.enroll(this.userId, this.currentSession, svc);
    return this.refresh();
  }
}

export class VerifyFlow {
  lastResult: VerifyResult | null = null;

  constructor(
    private readonly api: VerificationApi,
    readonly userId: string,
  ) {}

  async submit(stream: CaptureStream): Promise<VerifyResult> {
    const svc = exportSvc(stream);
    this.lastResult = await this.api.verify(this.userId, svc);
    return this.lastResult;
  }
}
