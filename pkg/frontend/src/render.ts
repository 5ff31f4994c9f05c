import { colorForWeight } from "./color.js";
import { MapNode, UnitDetail, UnitNode } from "./types.js";

export interface RenderContext {
  groups: Readonly<Record<string, string>>;
  onSelect: (path: string) => void;
  /** unit path -> cell element, for subtree-level redraw */
  registry: Map<string, HTMLElement>;
}

export function unitPath(label: string): string {
  const colon = label.indexOf(":");
  return colon < 0 ? label : label.slice(0, colon);
}

function renderUnitCell(unit: UnitNode, ctx: RenderContext): HTMLElement {
  const path = unitPath(unit.label);
  const cell = document.createElement("div");
  cell.className = "unit";
  cell.dataset.path = path;
  cell.dataset.count = String(unit.sample_ids.length);
  cell.title = unit.label;
  cell.style.backgroundColor = colorForWeight(unit.weight);

  const count = document.createElement("span");
  count.className = "count";
  count.textContent = String(unit.sample_ids.length);
  cell.appendChild(count);

  if (ctx.groups[unit.label] === "CrypticSpot") {
    const badge = document.createElement("span");
    badge.className = "badge badge-cryptic";
    badge.textContent = "cryptic";
    badge.title = "dominated by cryptic spots - worth expanding";
    cell.appendChild(badge);
  }

  cell.addEventListener("click", (event) => {
    event.stopPropagation();
    ctx.onSelect(path);
  });

  if (unit.child) {
    cell.appendChild(renderMap(unit.child, ctx));
  }
  ctx.registry.set(path, cell);
  return cell;
}

/** Grid widget for one map; child maps nest inside their parent unit. */
export function renderMap(node: MapNode, ctx: RenderContext): HTMLElement {
  const el = document.createElement("div");
  el.className = "map";
  el.dataset.path = node.path;
  el.style.display = "grid";
  el.style.gridTemplateColumns = `repeat(${node.cols}, minmax(2rem, 1fr))`;
  for (const unit of node.units) {
    el.appendChild(renderUnitCell(unit, ctx));
  }
  return el;
}

/** Locate the unit node addressed by a bracket path inside an export. */
export function findUnit(root: MapNode, path: string): UnitNode | null {
  if (!path.startsWith("[R]")) {
    return null;
  }
  const hops = [...path.matchAll(/\[([^\]]+)\]/g)].slice(1).map((m) => m[1]!);
  let map: MapNode | null = root;
  let unit: UnitNode | null = null;
  for (const hop of hops) {
    if (!map) {
      return null;
    }
    const [colS, rowS] = hop.includes(",")
      ? (hop.split(",") as [string, string])
      : [hop[0]!, hop[1]!];
    const col = Number(colS);
    const row = Number(rowS);
    unit = map.units.find((u) => u.row === row && u.col === col) ?? null;
    map = unit ? unit.child : null;
  }
  return unit;
}

/** Swap in a freshly rendered cell for one changed unit path, leaving
 * every other element of the document untouched. */
export function replaceUnitSubtree(
  root: MapNode,
  path: string,
  ctx: RenderContext,
): HTMLElement | null {
  const unit = findUnit(root, path);
  const old = ctx.registry.get(path);
  if (!unit || !old || !old.parentElement) {
    return null;
  }
  for (const key of [...ctx.registry.keys()]) {
    if (key.startsWith(path)) {
      ctx.registry.delete(key);
    }
  }
  const fresh = renderUnitCell(unit, ctx);
  old.replaceWith(fresh);
  return fresh;
}

export interface DetailHandlers {
  onExpand: (path: string) => void;
  expandDisabled: boolean;
}

/** Detail panel: the exported label and count verbatim, the records with
 * their discovery groups, and the expand control (absent on the root,
 * disabled on empty units or while a mutation is in flight). */
export function renderDetail(detail: UnitDetail, handlers: DetailHandlers): HTMLElement {
  const panel = document.createElement("div");
  panel.className = "detail";

  const title = document.createElement("h3");
  title.textContent = detail.label;
  panel.appendChild(title);

  const meta = document.createElement("p");
  meta.className = "meta";
  const group = detail.dominant_group ? ` - ${detail.dominant_group}` : "";
  meta.textContent = `${detail.count} samples, qe ${detail.qe.toFixed(4)}${group}`;
  panel.appendChild(meta);

  if (detail.path !== "[R]") {
    const button = document.createElement("button");
    button.className = "expand";
    button.textContent = "Expand unit";
    button.disabled = handlers.expandDisabled || detail.count === 0;
    button.addEventListener("click", () => {
      if (!button.disabled) {
        handlers.onExpand(detail.path);
      }
    });
    panel.appendChild(button);
  }

  const list = document.createElement("ul");
  list.className = "records";
  for (const record of detail.records) {
    const item = document.createElement("li");
    item.dataset.group = record.group;
    item.textContent =
      `${record.id} ${record.name} [${record.group}] ` +
      `eval ${record.evaluation} - ${record.comment}`;
    list.appendChild(item);
  }
  panel.appendChild(list);
  return panel;
}

export function renderConflictBanner(onRefresh: () => void): HTMLElement {
  const banner = document.createElement("div");
  banner.className = "conflict-banner";
  banner.textContent = "The tree changed under you. Refresh to continue.";
  const button = document.createElement("button");
  button.className = "refresh";
  button.textContent = "Refresh";
  button.addEventListener("click", onRefresh);
  banner.appendChild(button);
  return banner;
}
