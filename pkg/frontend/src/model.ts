/**
 * The editor's document model: an in-browser mirror of a dfd/1 model
 * document plus view state (node positions, selection, dirty flag).
 *
 * All analysis semantics live behind the HTTP service; this module only
 * maintains structure and guarantees that exports are schema-valid,
 * canonical dfd/1 documents (key order, id-sorted element arrays,
 * two-space indentation, trailing newline) that round-trip byte-identically
 * through the service's own serializer.
 */

export type NodeKind = "external" | "process" | "store";

export type TermNode =
  | { op: "true" }
  | { op: "false" }
  | { op: "ref"; labelType: string; label: string; flow?: string }
  | { op: "not"; term: TermNode }
  | { op: "and"; left: TermNode; right: TermNode }
  | { op: "or"; left: TermNode; right: TermNode };

export interface LabelDef {
  id: string;
  name: string;
}

export interface LabelTypeDef {
  id: string;
  name: string;
  labels: LabelDef[];
}

export interface PinDef {
  id: string;
  name: string;
}

export type AssignmentDef =
  | { kind: "forward"; inPins: string[]; outPin: string }
  | { kind: "set"; outPin: string; inPins: string[]; labels: string[]; term: TermNode };

export interface BehaviorDef {
  id: string;
  name: string;
  inPins: PinDef[];
  outPins: PinDef[];
  assignments: AssignmentDef[];
}

export interface NodeDef {
  id: string;
  name: string;
  kind: NodeKind;
  behavior: string;
  labels: string[];
}

export interface FlowDef {
  id: string;
  name: string;
  source: string;
  sourcePin: string;
  target: string;
  targetPin: string;
}

export interface Point {
  x: number;
  y: number;
}

/** Name-based assignment as returned by the check-assignment endpoint. */
export type CompiledAssignment =
  | { kind: "forward"; inputs: string[] }
  | { kind: "set"; labels: { labelType: string; label: string }[]; term: TermNode };

const FORMAT_VERSION = "dfd/1";

function termHasRefs(term: TermNode): boolean {
  switch (term.op) {
    case "ref":
      return true;
    case "not":
      return termHasRefs(term.term);
    case "and":
    case "or":
      return termHasRefs(term.left) || termHasRefs(term.right);
    default:
      return false;
  }
}

/** Mirrors Python's json.dumps(..., indent=2) with ensure_ascii semantics. */
function pythonJson(value: unknown): string {
  const text = JSON.stringify(value, null, 2);
  return text.replace(/[-￿]/g, (ch) =>
    "\\u" + ch.charCodeAt(0).toString(16).padStart(4, "0"),
  );
}

function byId<T extends { id: string }>(items: T[]): T[] {
  return [...items].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
}

export class WiringError extends Error {}

export class EditorDocument {
  labelTypes: LabelTypeDef[] = [];
  behaviors: BehaviorDef[] = [];
  nodes: NodeDef[] = [];
  flows: FlowDef[] = [];
  positions: Map<string, Point> = new Map();
  selection: string | null = null;
  dirty = false;
  private seq = 0;

  private touch(): void {
    this.dirty = true;
  }

  private freshId(prefix: string): string {
    this.seq += 1;
    let candidate = `${prefix}${this.seq}`;
    while (this.hasId(candidate)) {
      this.seq += 1;
      candidate = `${prefix}${this.seq}`;
    }
    return candidate;
  }

  private hasId(id: string): boolean {
    return (
      this.nodes.some((n) => n.id === id) ||
      this.flows.some((f) => f.id === id) ||
      this.behaviors.some((b) => b.id === id) ||
      this.labelTypes.some(
        (t) => t.id === id || t.labels.some((l) => l.id === id),
      )
    );
  }

  node(id: string): NodeDef {
    const found = this.nodes.find((n) => n.id === id);
    if (!found) throw new Error(`unknown node '${id}'`);
    return found;
  }

  behavior(id: string): BehaviorDef {
    const found = this.behaviors.find((b) => b.id === id);
    if (!found) throw new Error(`unknown behavior '${id}'`);
    return found;
  }

  behaviorOf(nodeId: string): BehaviorDef {
    return this.behavior(this.node(nodeId).behavior);
  }

  // -- graph edits ---------------------------------------------------------

  addNode(kind: NodeKind, name: string, at: Point, id?: string): NodeDef {
    const nodeId = id ?? this.freshId("n");
    if (this.hasId(nodeId)) throw new Error(`id '${nodeId}' already in use`);
    const behavior: BehaviorDef = {
      id: `b.${nodeId}`,
      name: `behavior of ${name}`,
      inPins: [],
      outPins: [],
      assignments: [],
    };
    const node: NodeDef = { id: nodeId, name, kind, behavior: behavior.id, labels: [] };
    this.behaviors.push(behavior);
    this.nodes.push(node);
    this.positions.set(nodeId, { ...at });
    this.touch();
    return node;
  }

  renameNode(nodeId: string, name: string): void {
    this.node(nodeId).name = name;
    this.touch();
  }

  renameBehavior(nodeId: string, name: string): void {
    this.behaviorOf(nodeId).name = name;
    this.touch();
  }

  deleteNode(nodeId: string): void {
    const node = this.node(nodeId);
    this.flows = this.flows.filter((f) => f.source !== nodeId && f.target !== nodeId);
    this.behaviors = this.behaviors.filter((b) => b.id !== node.behavior);
    this.nodes = this.nodes.filter((n) => n.id !== nodeId);
    this.positions.delete(nodeId);
    if (this.selection === nodeId) this.selection = null;
    this.touch();
  }

  moveNode(nodeId: string, at: Point): void {
    this.positions.set(nodeId, { ...at });
    this.touch();
  }

  addPin(nodeId: string, direction: "input" | "output", name: string, id?: string): PinDef {
    const behavior = this.behaviorOf(nodeId);
    const pin: PinDef = { id: id ?? `${nodeId}.${direction === "input" ? "in" : "out"}.${name}`, name };
    const pins = direction === "input" ? behavior.inPins : behavior.outPins;
    if (pins.some((p) => p.id === pin.id)) {
      throw new Error(`pin '${pin.id}' already exists`);
    }
    pins.push(pin);
    this.touch();
    return pin;
  }

  deletePin(nodeId: string, pinId: string): void {
    const behavior = this.behaviorOf(nodeId);
    behavior.inPins = behavior.inPins.filter((p) => p.id !== pinId);
    behavior.outPins = behavior.outPins.filter((p) => p.id !== pinId);
    behavior.assignments = behavior.assignments.filter(
      (a) => a.outPin !== pinId && !a.inPins.includes(pinId),
    );
    this.flows = this.flows.filter((f) => f.sourcePin !== pinId && f.targetPin !== pinId);
    this.touch();
  }

  /**
   * Wire an output pin to an input pin.  Illegal wiring (output to output,
   * input to input, or unknown pins) is rejected with a WiringError so the
   * canvas can refuse the gesture inline.
   */
  connect(sourceNode: string, sourcePin: string, targetNode: string, targetPin: string,
          dataName: string): FlowDef {
    const sourceBehavior = this.behaviorOf(sourceNode);
    const targetBehavior = this.behaviorOf(targetNode);
    if (!sourceBehavior.outPins.some((p) => p.id === sourcePin)) {
      throw new WiringError("flows must start at an output pin");
    }
    if (!targetBehavior.inPins.some((p) => p.id === targetPin)) {
      throw new WiringError("flows must end at an input pin");
    }
    const flow: FlowDef = {
      id: this.freshId("f"),
      name: dataName,
      source: sourceNode,
      sourcePin,
      target: targetNode,
      targetPin,
    };
    this.flows.push(flow);
    this.touch();
    return flow;
  }

  deleteFlow(flowId: string): void {
    this.flows = this.flows.filter((f) => f.id !== flowId);
    this.touch();
  }

  // -- label dictionary ----------------------------------------------------

  addLabelType(name: string): LabelTypeDef {
    if (this.labelTypes.some((t) => t.name === name)) {
      throw new Error(`label type '${name}' already exists`);
    }
    const labelType: LabelTypeDef = { id: name, name, labels: [] };
    this.labelTypes.push(labelType);
    this.touch();
    return labelType;
  }

  addLabel(typeName: string, labelName: string): LabelDef {
    const labelType = this.labelTypes.find((t) => t.name === typeName);
    if (!labelType) throw new Error(`unknown label type '${typeName}'`);
    if (labelType.labels.some((l) => l.name === labelName)) {
      throw new Error(`label '${typeName}.${labelName}' already exists`);
    }
    const label: LabelDef = { id: `${typeName}.${labelName}`, name: labelName };
    labelType.labels.push(label);
    this.touch();
    return label;
  }

  /** Drag target: annotate a node with a label (idempotent). */
  assignLabel(nodeId: string, labelId: string): void {
    const node = this.node(nodeId);
    if (!this.labelTypes.some((t) => t.labels.some((l) => l.id === labelId))) {
      throw new Error(`unknown label '${labelId}'`);
    }
    if (!node.labels.includes(labelId)) {
      node.labels.push(labelId);
      this.touch();
    }
  }

  unassignLabel(nodeId: string, labelId: string): void {
    const node = this.node(nodeId);
    node.labels = node.labels.filter((l) => l !== labelId);
    this.touch();
  }

  // -- assignments ---------------------------------------------------------

  /** Incoming edge names available to a node (what assignment text may reference). */
  incomingNames(nodeId: string): string[] {
    const names = new Set<string>();
    for (const flow of this.flows) {
      if (flow.target === nodeId) names.add(flow.name);
    }
    return [...names].sort();
  }

  labelVocabulary(): Record<string, string[]> {
    const vocabulary: Record<string, string[]> = {};
    for (const labelType of this.labelTypes) {
      vocabulary[labelType.name] = labelType.labels.map((l) => l.name);
    }
    return vocabulary;
  }

  /**
   * Install the assignments of one output pin from service-compiled,
   * name-based structures.  Forward inputs name incoming edges; they are
   * resolved to the input pins those edges land on.  Label references are
   * resolved against the dictionary.
   */
  setAssignments(nodeId: string, outPinId: string, compiled: CompiledAssignment[]): void {
    const behavior = this.behaviorOf(nodeId);
    if (!behavior.outPins.some((p) => p.id === outPinId)) {
      throw new Error(`'${outPinId}' is not an output pin of node '${nodeId}'`);
    }
    const pinForEdge = new Map<string, string>();
    for (const flow of this.flows) {
      if (flow.target === nodeId) pinForEdge.set(flow.name, flow.targetPin);
    }
    const labelId = (ref: { labelType: string; label: string }): string => {
      const labelType = this.labelTypes.find((t) => t.name === ref.labelType);
      const label = labelType?.labels.find((l) => l.name === ref.label);
      if (!label) throw new Error(`unknown label '${ref.labelType}.${ref.label}'`);
      return label.id;
    };

    const installed: AssignmentDef[] = compiled.map((assignment) => {
      if (assignment.kind === "forward") {
        const inPins = assignment.inputs.map((name) => {
          const pin = pinForEdge.get(name);
          if (!pin) throw new Error(`no incoming edge named '${name}'`);
          return pin;
        });
        return { kind: "forward", inPins, outPin: outPinId };
      }
      // A term that references labels consults the data on all input pins;
      // a constant term needs none, matching the canonical fixtures.
      const inPins = termHasRefs(assignment.term)
        ? behavior.inPins.map((p) => p.id)
        : [];
      return {
        kind: "set",
        outPin: outPinId,
        inPins,
        labels: assignment.labels.map(labelId).sort(),
        term: assignment.term,
      };
    });

    behavior.assignments = behavior.assignments
      .filter((a) => a.outPin !== outPinId)
      .concat(installed);
    this.touch();
  }

  // -- serialization -------------------------------------------------------

  /** The analysis document: canonical dfd/1 bytes without any view state. */
  exportModel(): string {
    const doc = {
      version: FORMAT_VERSION,
      dataDictionary: {
        labelTypes: byId(this.labelTypes).map((t) => ({
          id: t.id,
          name: t.name,
          labels: byId(t.labels).map((l) => ({ id: l.id, name: l.name })),
        })),
        behaviors: byId(this.behaviors).map((b) => ({
          id: b.id,
          name: b.name,
          inPins: b.inPins.map((p) => ({ id: p.id, name: p.name })),
          outPins: b.outPins.map((p) => ({ id: p.id, name: p.name })),
          assignments: b.assignments.map((a) =>
            a.kind === "forward"
              ? { kind: "forward", inPins: [...a.inPins], outPin: a.outPin }
              : {
                  kind: "set",
                  outPin: a.outPin,
                  inPins: [...a.inPins],
                  labels: [...a.labels].sort(),
                  term: a.term,
                },
          ),
        })),
      },
      dfd: {
        nodes: byId(this.nodes).map((n) => ({
          id: n.id,
          name: n.name,
          kind: n.kind,
          behavior: n.behavior,
          labels: [...n.labels].sort(),
        })),
        flows: byId(this.flows).map((f) => ({
          id: f.id,
          name: f.name,
          source: f.source,
          sourcePin: f.sourcePin,
          target: f.target,
          targetPin: f.targetPin,
        })),
      },
    };
    return pythonJson(doc) + "\n";
  }

  /** Parsed document for request bodies. */
  modelDocument(): unknown {
    return JSON.parse(this.exportModel());
  }

  /** Editor save file: the model plus a view sidecar the analysis ignores. */
  exportWithView(): string {
    const doc = JSON.parse(this.exportModel()) as Record<string, unknown>;
    doc["view"] = {
      positions: Object.fromEntries(
        [...this.positions.entries()].sort(([a], [b]) => (a < b ? -1 : 1)),
      ),
    };
    return pythonJson(doc) + "\n";
  }

  static import(text: string): EditorDocument {
    const raw = JSON.parse(text) as any;
    if (raw?.version !== FORMAT_VERSION) {
      throw new Error(`unsupported document version '${raw?.version}'`);
    }
    const doc = new EditorDocument();
    for (const t of raw.dataDictionary?.labelTypes ?? []) {
      doc.labelTypes.push({
        id: String(t.id),
        name: String(t.name),
        labels: (t.labels ?? []).map((l: any) => ({ id: String(l.id), name: String(l.name) })),
      });
    }
    for (const b of raw.dataDictionary?.behaviors ?? []) {
      doc.behaviors.push({
        id: String(b.id),
        name: String(b.name),
        inPins: (b.inPins ?? []).map((p: any) => ({ id: String(p.id), name: String(p.name) })),
        outPins: (b.outPins ?? []).map((p: any) => ({ id: String(p.id), name: String(p.name) })),
        assignments: (b.assignments ?? []).map((a: any) =>
          a.kind === "forward"
            ? { kind: "forward", inPins: a.inPins.map(String), outPin: String(a.outPin) }
            : {
                kind: "set",
                outPin: String(a.outPin),
                inPins: (a.inPins ?? []).map(String),
                labels: (a.labels ?? []).map(String),
                term: a.term as TermNode,
              },
        ),
      });
    }
    for (const n of raw.dfd?.nodes ?? []) {
      doc.nodes.push({
        id: String(n.id),
        name: String(n.name),
        kind: n.kind as NodeKind,
        behavior: String(n.behavior),
        labels: (n.labels ?? []).map(String),
      });
    }
    for (const f of raw.dfd?.flows ?? []) {
      doc.flows.push({
        id: String(f.id),
        name: String(f.name),
        source: String(f.source),
        sourcePin: String(f.sourcePin),
        target: String(f.target),
        targetPin: String(f.targetPin),
      });
    }
    const positions = raw.view?.positions ?? {};
    let fallback = 0;
    for (const node of doc.nodes) {
      const p = positions[node.id];
      doc.positions.set(
        node.id,
        p ? { x: Number(p.x), y: Number(p.y) } : { x: 80 + (fallback % 4) * 180, y: 80 + Math.floor(fallback / 4) * 140 },
      );
      fallback += 1;
    }
    doc.dirty = false;
    return doc;
  }
}
