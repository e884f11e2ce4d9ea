/**
 * The interactive editor: SVG canvas with drag-and-drop node creation,
 * pin wiring, label management, per-pin assignment editing with live
 * syntax checks, and one-click analysis with violation highlighting.
 */

import { AnalysisClient, AssignmentCheckJson, ServiceError } from "./api.js";
import { deriveHighlights, emptyHighlights, HighlightState } from "./highlight.js";
import {
  CompiledAssignment,
  EditorDocument,
  NodeDef,
  NodeKind,
  PinDef,
  TermNode,
  WiringError,
} from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_W = 150;
const NODE_H = 64;

type Mode = "select" | "add-external" | "add-process" | "add-store" | "connect";

interface PinRef {
  nodeId: string;
  pin: PinDef;
  direction: "input" | "output";
}

function termToText(term: TermNode): string {
  switch (term.op) {
    case "true":
      return "TRUE";
    case "false":
      return "FALSE";
    case "ref":
      return (term.flow ? `${term.flow}:` : "") + `${term.labelType}.${term.label}`;
    case "not":
      return `NOT (${termToText(term.term)})`;
    case "and":
      return `(${termToText(term.left)} AND ${termToText(term.right)})`;
    case "or":
      return `(${termToText(term.left)} OR ${termToText(term.right)})`;
  }
}

export class EditorApp {
  doc = new EditorDocument();
  mode: Mode = "select";
  pendingSource: PinRef | null = null;
  armedLabel: string | null = null;
  highlights: HighlightState = emptyHighlights();

  private canvas: SVGSVGElement;
  private banner: HTMLElement;
  private diagnosticsPanel: HTMLElement;
  private labelPanel: HTMLElement;
  private statusLine: HTMLElement;
  private dialog: HTMLElement;
  private dialogText: HTMLTextAreaElement;
  private dialogDiagnostics: HTMLElement;
  private dialogTarget: { nodeId: string; outPinId: string } | null = null;
  private checkTimer: number | undefined;
  private dragging: { nodeId: string; dx: number; dy: number } | null = null;

  constructor(private root: HTMLElement, private client: AnalysisClient) {
    this.canvas = root.querySelector("#canvas") as SVGSVGElement;
    this.banner = root.querySelector("#banner") as HTMLElement;
    this.diagnosticsPanel = root.querySelector("#diagnostics") as HTMLElement;
    this.labelPanel = root.querySelector("#label-panel") as HTMLElement;
    this.statusLine = root.querySelector("#status") as HTMLElement;
    this.dialog = root.querySelector("#assignment-dialog") as HTMLElement;
    this.dialogText = root.querySelector("#assignment-text") as HTMLTextAreaElement;
    this.dialogDiagnostics = root.querySelector("#assignment-diagnostics") as HTMLElement;
    this.bindToolbar();
    this.bindCanvas();
    this.bindDialog();
    this.bindFileActions();
    this.render();
  }

  // -- wiring --------------------------------------------------------------

  private bindToolbar(): void {
    this.root.querySelectorAll<HTMLButtonElement>("[data-mode]").forEach((button) => {
      button.addEventListener("click", () => {
        this.mode = button.dataset.mode as Mode;
        this.pendingSource = null;
        this.setStatus(`mode: ${this.mode}`);
      });
    });
    (this.root.querySelector("#add-in-pin") as HTMLButtonElement).addEventListener(
      "click", () => this.addPinToSelection("input"));
    (this.root.querySelector("#add-out-pin") as HTMLButtonElement).addEventListener(
      "click", () => this.addPinToSelection("output"));
    (this.root.querySelector("#analyze-btn") as HTMLButtonElement).addEventListener(
      "click", () => void this.analyze());
    (this.root.querySelector("#add-label-type") as HTMLButtonElement).addEventListener(
      "click", () => {
        const name = prompt("Label type name:");
        if (name) {
          try {
            this.doc.addLabelType(name.trim());
          } catch (error) {
            this.setStatus(String(error));
          }
          this.render();
        }
      });
    document.addEventListener("keydown", (event) => {
      if (event.key === "Delete" && this.doc.selection) {
        this.deleteSelection();
      }
    });
  }

  private bindCanvas(): void {
    this.canvas.addEventListener("pointerdown", (event) => {
      if (event.target !== this.canvas) return;
      if (this.mode.startsWith("add-")) {
        const kind = this.mode.slice(4) as NodeKind;
        const point = this.canvasPoint(event);
        const name = prompt(`Name of the new ${kind} node:`, kind);
        if (name) {
          this.doc.addNode(kind, name.trim(), point);
          this.render();
        }
      } else {
        this.doc.selection = null;
        this.render();
      }
    });
    this.canvas.addEventListener("pointermove", (event) => {
      if (this.dragging) {
        const point = this.canvasPoint(event);
        this.doc.moveNode(this.dragging.nodeId, {
          x: point.x - this.dragging.dx,
          y: point.y - this.dragging.dy,
        });
        this.render();
      }
    });
    this.canvas.addEventListener("pointerup", () => {
      this.dragging = null;
    });
  }

  private bindDialog(): void {
    this.dialogText.addEventListener("input", () => {
      window.clearTimeout(this.checkTimer);
      this.checkTimer = window.setTimeout(() => void this.liveCheck(), 250);
    });
    (this.root.querySelector("#assignment-save") as HTMLButtonElement).addEventListener(
      "click", () => void this.saveAssignments());
    (this.root.querySelector("#assignment-cancel") as HTMLButtonElement).addEventListener(
      "click", () => this.closeDialog());
  }

  private bindFileActions(): void {
    (this.root.querySelector("#export-btn") as HTMLButtonElement).addEventListener(
      "click", () => this.download("model.json", this.doc.exportModel()));
    (this.root.querySelector("#save-btn") as HTMLButtonElement).addEventListener(
      "click", () => this.download("model.editor.json", this.doc.exportWithView()));
    const fileInput = this.root.querySelector("#import-file") as HTMLInputElement;
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (!file) return;
      void file.text().then((text) => {
        try {
          this.doc = EditorDocument.import(text);
          this.highlights = emptyHighlights();
          this.render();
          this.setStatus(`imported ${file.name}`);
        } catch (error) {
          this.setStatus(`import failed: ${error}`);
        }
        fileInput.value = "";
      });
    });
  }

  // -- gestures ------------------------------------------------------------

  private canvasPoint(event: PointerEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  private addPinToSelection(direction: "input" | "output"): void {
    if (!this.doc.selection) {
      this.setStatus("select a node first");
      return;
    }
    const name = prompt(`Name of the new ${direction} pin:`, "data");
    if (!name) return;
    try {
      this.doc.addPin(this.doc.selection, direction, name.trim());
      this.render();
    } catch (error) {
      this.setStatus(String(error));
    }
  }

  private deleteSelection(): void {
    const selected = this.doc.selection;
    if (!selected) return;
    if (this.doc.nodes.some((n) => n.id === selected)) {
      this.doc.deleteNode(selected);
    } else if (this.doc.flows.some((f) => f.id === selected)) {
      this.doc.deleteFlow(selected);
    }
    this.render();
  }

  private onPinClick(ref: PinRef): void {
    if (this.mode !== "connect") return;
    if (!this.pendingSource) {
      if (ref.direction !== "output") {
        this.setStatus("flows must start at an output pin");
        return;
      }
      this.pendingSource = ref;
      this.setStatus(`connecting from ${ref.pin.name} of ${ref.nodeId}...`);
      return;
    }
    const source = this.pendingSource;
    this.pendingSource = null;
    const dataName = prompt("Data name carried by this flow:", source.pin.name);
    if (!dataName) return;
    try {
      this.doc.connect(source.nodeId, source.pin.id, ref.nodeId, ref.pin.id,
                       dataName.trim());
      this.setStatus("flow created");
    } catch (error) {
      if (error instanceof WiringError) {
        this.setStatus(`rejected: ${error.message}`);
      } else {
        throw error;
      }
    }
    this.render();
  }

  private onPinDoubleClick(ref: PinRef): void {
    if (ref.direction !== "output") return;
    this.dialogTarget = { nodeId: ref.nodeId, outPinId: ref.pin.id };
    this.dialogText.value = this.assignmentText(ref.nodeId, ref.pin.id);
    this.dialogDiagnostics.textContent = "";
    this.dialog.style.display = "block";
    void this.liveCheck();
  }

  /** Textual form of one pin's current assignments, for editing. */
  private assignmentText(nodeId: string, outPinId: string): string {
    const behavior = this.doc.behaviorOf(nodeId);
    const edgeForPin = new Map<string, string[]>();
    for (const flow of this.doc.flows) {
      if (flow.target === nodeId) {
        const names = edgeForPin.get(flow.targetPin) ?? [];
        names.push(flow.name);
        edgeForPin.set(flow.targetPin, names);
      }
    }
    const labelName = (labelId: string): string => {
      for (const t of this.doc.labelTypes) {
        for (const l of t.labels) {
          if (l.id === labelId) return `${t.name}.${l.name}`;
        }
      }
      return labelId;
    };
    const lines: string[] = [];
    for (const assignment of behavior.assignments) {
      if (assignment.outPin !== outPinId) continue;
      if (assignment.kind === "forward") {
        const names = assignment.inPins.flatMap((pin) => edgeForPin.get(pin) ?? []);
        lines.push(`forward ${names.join(", ")}`);
      } else {
        lines.push(`set ${assignment.labels.map(labelName).join(", ")} ` +
                   `if ${termToText(assignment.term)}`);
      }
    }
    return lines.join("\n");
  }

  private async liveCheck(): Promise<AssignmentCheckJson | null> {
    if (!this.dialogTarget) return null;
    const { nodeId } = this.dialogTarget;
    try {
      const result = await this.client.checkAssignment(
        this.dialogText.value,
        this.doc.incomingNames(nodeId),
        this.doc.labelVocabulary(),
      );
      this.dialogDiagnostics.innerHTML = "";
      this.dialogText.classList.toggle("squiggle", result.diagnostics.length > 0);
      for (const d of result.diagnostics) {
        const line = document.createElement("div");
        line.className = "diagnostic";
        line.textContent = `${d.line}:${d.column} ${d.message}`;
        this.dialogDiagnostics.appendChild(line);
      }
      return result;
    } catch {
      this.showBanner("analysis service unreachable; syntax checks paused");
      return null;
    }
  }

  private async saveAssignments(): Promise<void> {
    if (!this.dialogTarget) return;
    const result = await this.liveCheck();
    if (!result || result.diagnostics.length > 0 || !result.compiled) return;
    try {
      this.doc.setAssignments(this.dialogTarget.nodeId, this.dialogTarget.outPinId,
                              result.compiled as CompiledAssignment[]);
      this.closeDialog();
      this.render();
    } catch (error) {
      this.dialogDiagnostics.textContent = String(error);
    }
  }

  private closeDialog(): void {
    this.dialog.style.display = "none";
    this.dialogTarget = null;
  }

  // -- analysis ------------------------------------------------------------

  async analyze(): Promise<void> {
    const constraints = (this.root.querySelector("#constraints") as HTMLTextAreaElement)
      .value;
    this.diagnosticsPanel.textContent = "";
    try {
      const report = await this.client.analyze(this.doc.modelDocument(),
                                               constraints ? [constraints] : []);
      if (report === null) return; // superseded by a newer request
      this.highlights = deriveHighlights(report);
      this.hideBanner();
      this.setStatus(
        `analysis: ${report.model.tfgs} TFGs, ` +
        `${report.constraints.reduce((n, c) => n + c.count, 0)} violation(s)`);
    } catch (error) {
      if (error instanceof ServiceError) {
        this.diagnosticsPanel.textContent = `analysis rejected: ${error.message}`;
      } else {
        this.showBanner("analysis service unreachable; results may be stale");
      }
    }
    this.render();
  }

  // -- rendering -----------------------------------------------------------

  private setStatus(text: string): void {
    this.statusLine.textContent = text;
  }

  private showBanner(text: string): void {
    this.banner.textContent = text;
    this.banner.style.display = "block";
  }

  private hideBanner(): void {
    this.banner.style.display = "none";
  }

  private download(filename: string, text: string): void {
    const anchor = document.createElement("a");
    anchor.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
    anchor.download = filename;
    anchor.click();
    URL.revokeObjectURL(anchor.href);
  }

  render(): void {
    this.renderLabelPanel();
    this.canvas.innerHTML = "";
    for (const flow of this.doc.flows) this.renderFlow(flow.id);
    for (const node of this.doc.nodes) this.renderNode(node);
  }

  private renderLabelPanel(): void {
    this.labelPanel.innerHTML = "";
    for (const labelType of this.doc.labelTypes) {
      const group = document.createElement("div");
      group.className = "label-type";
      const header = document.createElement("div");
      header.className = "label-type-name";
      header.textContent = labelType.name;
      const addButton = document.createElement("button");
      addButton.textContent = "+";
      addButton.title = `add a label to ${labelType.name}`;
      addButton.addEventListener("click", () => {
        const name = prompt(`New label in ${labelType.name}:`);
        if (name) {
          try {
            this.doc.addLabel(labelType.name, name.trim());
          } catch (error) {
            this.setStatus(String(error));
          }
          this.render();
        }
      });
      header.appendChild(addButton);
      group.appendChild(header);
      for (const label of labelType.labels) {
        const chip = document.createElement("span");
        chip.className = "label-chip" + (this.armedLabel === label.id ? " armed" : "");
        chip.textContent = label.name;
        chip.draggable = true;
        chip.addEventListener("dragstart", (event) => {
          event.dataTransfer?.setData("text/flowcheck-label", label.id);
        });
        chip.addEventListener("click", () => {
          this.armedLabel = this.armedLabel === label.id ? null : label.id;
          this.render();
          this.setStatus(this.armedLabel
            ? `click a node to apply ${label.id}` : "label disarmed");
        });
        group.appendChild(chip);
      }
      this.labelPanel.appendChild(group);
    }
  }

  private renderNode(node: NodeDef): void {
    const position = this.doc.positions.get(node.id) ?? { x: 60, y: 60 };
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("transform", `translate(${position.x},${position.y})`);
    group.classList.add("node", node.kind);
    if (this.doc.selection === node.id) group.classList.add("selected");
    if (this.highlights.violating.has(node.id)) group.classList.add("violating");

    const shape = document.createElementNS(SVG_NS, "rect");
    shape.setAttribute("width", String(NODE_W));
    shape.setAttribute("height", String(NODE_H));
    shape.setAttribute("rx", node.kind === "process" ? "18" : "3");
    group.appendChild(shape);
    if (node.kind === "store") {
      const lid = document.createElementNS(SVG_NS, "line");
      lid.setAttribute("x1", "0");
      lid.setAttribute("y1", "10");
      lid.setAttribute("x2", String(NODE_W));
      lid.setAttribute("y2", "10");
      group.appendChild(lid);
    }

    const title = document.createElementNS(SVG_NS, "text");
    title.setAttribute("x", String(NODE_W / 2));
    title.setAttribute("y", "26");
    title.setAttribute("text-anchor", "middle");
    title.textContent = node.name;
    group.appendChild(title);

    const labelLine = document.createElementNS(SVG_NS, "text");
    labelLine.setAttribute("x", String(NODE_W / 2));
    labelLine.setAttribute("y", "44");
    labelLine.setAttribute("text-anchor", "middle");
    labelLine.classList.add("node-labels");
    labelLine.textContent = node.labels.join(", ");
    group.appendChild(labelLine);

    const tooltipLines = this.highlights.tooltips.get(node.id);
    if (tooltipLines) {
      const tooltip = document.createElementNS(SVG_NS, "title");
      tooltip.textContent = tooltipLines.join("\n");
      group.appendChild(tooltip);
    }

    group.addEventListener("pointerdown", (event) => {
      event.stopPropagation();
      this.doc.selection = node.id;
      const point = this.canvasPoint(event);
      this.dragging = {
        nodeId: node.id,
        dx: point.x - position.x,
        dy: point.y - position.y,
      };
      this.render();
    });
    group.addEventListener("dblclick", (event) => {
      event.stopPropagation();
      const name = prompt("Rename node:", node.name);
      if (name) {
        this.doc.renameNode(node.id, name.trim());
        this.render();
      }
    });
    group.addEventListener("click", () => {
      if (this.armedLabel) {
        this.doc.assignLabel(node.id, this.armedLabel);
        this.render();
      }
    });
    group.addEventListener("dragover", (event) => event.preventDefault());
    group.addEventListener("drop", (event) => {
      const labelId = event.dataTransfer?.getData("text/flowcheck-label");
      if (labelId) {
        event.preventDefault();
        this.doc.assignLabel(node.id, labelId);
        this.render();
      }
    });

    const behavior = this.doc.behaviorOf(node.id);
    behavior.inPins.forEach((pin, index) => {
      group.appendChild(this.renderPin(node.id, pin, "input", index));
    });
    behavior.outPins.forEach((pin, index) => {
      group.appendChild(this.renderPin(node.id, pin, "output", index));
    });

    this.canvas.appendChild(group);
  }

  private renderPin(nodeId: string, pin: PinDef, direction: "input" | "output",
                    index: number): SVGElement {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", direction === "input" ? "0" : String(NODE_W));
    circle.setAttribute("cy", String(18 + index * 16));
    circle.setAttribute("r", "6");
    circle.classList.add("pin", direction);
    const tooltip = document.createElementNS(SVG_NS, "title");
    tooltip.textContent = `${direction} pin '${pin.name}'` +
      (direction === "output" ? " (double-click to edit assignments)" : "");
    circle.appendChild(tooltip);
    circle.addEventListener("pointerdown", (event) => event.stopPropagation());
    circle.addEventListener("click", (event) => {
      event.stopPropagation();
      this.onPinClick({ nodeId, pin, direction });
    });
    circle.addEventListener("dblclick", (event) => {
      event.stopPropagation();
      this.onPinDoubleClick({ nodeId, pin, direction });
    });
    return circle;
  }

  private pinPosition(nodeId: string, pinId: string): { x: number; y: number } {
    const position = this.doc.positions.get(nodeId) ?? { x: 0, y: 0 };
    const behavior = this.doc.behaviorOf(nodeId);
    const inIndex = behavior.inPins.findIndex((p) => p.id === pinId);
    if (inIndex >= 0) return { x: position.x, y: position.y + 18 + inIndex * 16 };
    const outIndex = behavior.outPins.findIndex((p) => p.id === pinId);
    return { x: position.x + NODE_W, y: position.y + 18 + Math.max(outIndex, 0) * 16 };
  }

  private renderFlow(flowId: string): void {
    const flow = this.doc.flows.find((f) => f.id === flowId);
    if (!flow) return;
    const from = this.pinPosition(flow.source, flow.sourcePin);
    const to = this.pinPosition(flow.target, flow.targetPin);
    const path = document.createElementNS(SVG_NS, "path");
    const dx = Math.max(40, (to.x - from.x) / 2);
    path.setAttribute(
      "d",
      `M ${from.x} ${from.y} C ${from.x + dx} ${from.y}, ${to.x - dx} ${to.y}, ` +
      `${to.x} ${to.y}`,
    );
    path.classList.add("flow");
    if (this.doc.selection === flow.id) path.classList.add("selected");
    path.addEventListener("click", (event) => {
      event.stopPropagation();
      this.doc.selection = flow.id;
      this.render();
    });
    this.canvas.appendChild(path);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String((from.x + to.x) / 2));
    label.setAttribute("y", String((from.y + to.y) / 2 - 6));
    label.setAttribute("text-anchor", "middle");
    label.classList.add("flow-label");
    label.textContent = flow.name;
    this.canvas.appendChild(label);
  }
}
