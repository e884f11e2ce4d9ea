/**
 * Thin client for the analysis service.  The editor holds no analysis
 * logic: everything semantic goes through these endpoints.  At most one
 * analysis request is relevant at a time; later requests supersede earlier
 * ones and stale responses are dropped.
 */

export interface ViolationJson {
  constraint: string;
  tfg: number;
  vertex: string;
  variable: string;
  labels: string[];
  nodeLabels: string[];
  trace: { node: string; origin?: string };
}

export interface AnalysisReportJson {
  version: string;
  model: { nodes: number; flows: number; tfgs: number };
  constraints: { name: string; count: number; violations: ViolationJson[] }[];
  nodeViolations: Record<string, boolean>;
}

export interface FindingJson {
  severity: string;
  code: string;
  element: string;
  message: string;
}

export interface DiagnosticJson {
  line: number;
  column: number;
  message: string;
}

export type CompiledAssignmentJson =
  | { kind: "forward"; inputs: string[] }
  | { kind: "set"; labels: { labelType: string; label: string }[]; term: unknown };

export interface AssignmentCheckJson {
  diagnostics: DiagnosticJson[];
  /** Present when the text parsed; name-based form the editor installs. */
  compiled?: CompiledAssignmentJson[];
}

export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnalysisClient {
  private analysisSeq = 0;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post(path: string, body: unknown): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const payload = (await response.json()) as { error?: string };
        if (payload.error) detail = payload.error;
      } catch {
        // keep the status text
      }
      throw new ServiceError(detail, response.status);
    }
    return response.json();
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/health`);
      return response.ok;
    } catch {
      return false;
    }
  }

  async validate(model: unknown): Promise<FindingJson[]> {
    const payload = (await this.post("/api/v1/validate", model)) as {
      findings: FindingJson[];
    };
    return payload.findings;
  }

  /**
   * Run the analysis.  Returns null when a newer analyze() call was issued
   * while this one was in flight (the stale response must not repaint).
   */
  async analyze(model: unknown, constraints: string[]): Promise<AnalysisReportJson | null> {
    this.analysisSeq += 1;
    const seq = this.analysisSeq;
    const report = (await this.post("/api/v1/analyze", {
      model,
      constraints,
    })) as AnalysisReportJson;
    return seq === this.analysisSeq ? report : null;
  }

  async checkAssignment(
    text: string,
    inputs: string[],
    labelTypes: Record<string, string[]>,
  ): Promise<AssignmentCheckJson> {
    return (await this.post("/api/v1/check-assignment", {
      text,
      inputs,
      labelTypes,
    })) as AssignmentCheckJson;
  }
}
