/**
 * Violation highlighting, derived purely from the last analysis response.
 * Re-deriving from the same report always reproduces the same state.
 */

import type { AnalysisReportJson } from "./api.js";

export interface HighlightState {
  /** Node ids to paint as violating. */
  violating: Set<string>;
  /** Tooltip lines per node id: constraint, variable, and matched labels. */
  tooltips: Map<string, string[]>;
}

export function emptyHighlights(): HighlightState {
  return { violating: new Set(), tooltips: new Map() };
}

export function deriveHighlights(report: AnalysisReportJson): HighlightState {
  const violating = new Set<string>();
  for (const [nodeId, flagged] of Object.entries(report.nodeViolations)) {
    if (flagged) violating.add(nodeId);
  }
  const tooltips = new Map<string, string[]>();
  for (const constraint of report.constraints) {
    for (const violation of constraint.violations) {
      const nodeId = violation.trace.node;
      const lines = tooltips.get(nodeId) ?? [];
      lines.push(
        `${violation.constraint}: '${violation.variable}' carries ` +
          `${violation.labels.join(", ") || "no labels"}`,
      );
      tooltips.set(nodeId, lines);
    }
  }
  return { violating, tooltips };
}
