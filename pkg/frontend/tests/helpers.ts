import { SessionApi } from "../src/api.js";
import {
  ConflictError,
  ExpandResponse,
  MapNode,
  RecordPayload,
  TreeExport,
  TreeResponse,
  UnitDetail,
  UnitNode,
} from "../src/types.js";
import { findUnit, unitPath } from "../src/render.js";

import treeFixture from "./fixtures/tree.json";
import groupsFixture from "./fixtures/groups.json";

export function fixtureTree(): TreeExport {
  return JSON.parse(JSON.stringify(treeFixture)) as TreeExport;
}

export function fixtureGroups(): Record<string, string> {
  return { ...(groupsFixture as Record<string, string>) };
}

export function* walkUnits(map: MapNode): Generator<UnitNode> {
  for (const unit of map.units) {
    yield unit;
    if (unit.child) {
      yield* walkUnits(unit.child);
    }
  }
}

export function findLeafWithSamples(tree: TreeExport, minimum = 2): UnitNode {
  for (const unit of walkUnits(tree.root)) {
    if (!unit.child && unit.sample_ids.length >= minimum) {
      return unit;
    }
  }
  throw new Error("fixture has no populated leaf");
}

export function findEmptyLeaf(tree: TreeExport): UnitNode {
  for (const unit of walkUnits(tree.root)) {
    if (!unit.child && unit.sample_ids.length === 0) {
      return unit;
    }
  }
  throw new Error("fixture has no empty leaf");
}

function dummyRecord(id: string): RecordPayload {
  return {
    id,
    name: `spot ${id}`,
    lat: 34.28,
    lon: 132.32,
    evaluation: 3,
    comment: "quiet maple garden",
    group: "CrypticSpot",
    image_sim: 0.2,
    tfidf: 0.8,
  };
}

/** In-memory stand-in for the session service. Expansion synthesizes a
 * 2x2 child map under the target unit and bumps the revision. */
export class FakeApi implements SessionApi {
  tree: TreeExport;
  groups: Record<string, string>;
  revision = 0;
  expandCalls: string[] = [];
  getTreeCalls = 0;
  conflictMode = false;

  constructor(tree: TreeExport = fixtureTree(),
              groups: Record<string, string> = fixtureGroups()) {
    this.tree = tree;
    this.groups = groups;
  }

  async getTree(): Promise<TreeResponse> {
    this.getTreeCalls += 1;
    return {
      session_id: "s-test",
      revision: this.revision,
      tree: JSON.parse(JSON.stringify(this.tree)) as TreeExport,
      dominant_groups: { ...this.groups },
    };
  }

  async getUnit(_sid: string, path: string): Promise<UnitDetail> {
    if (path === "[R]") {
      return {
        path: "[R]",
        label: "[R]",
        count: this.tree.n_samples,
        qe: this.tree.qe_layer0,
        sample_ids: [],
        records: [],
        has_child: true,
      };
    }
    const unit = findUnit(this.tree.root, path);
    if (!unit) {
      throw new Error(`422: no unit at ${path}`);
    }
    return {
      path,
      label: unit.label,
      count: unit.sample_ids.length,
      qe: unit.qe,
      weight: unit.weight,
      sample_ids: [...unit.sample_ids],
      records: unit.sample_ids.map(dummyRecord),
      dominant_group: this.groups[unit.label] ?? "Mixed",
      has_child: unit.child !== null,
    };
  }

  async postExpand(_sid: string, path: string): Promise<ExpandResponse> {
    this.expandCalls.push(path);
    if (this.conflictMode) {
      throw new ConflictError(this.revision);
    }
    const unit = findUnit(this.tree.root, path);
    if (!unit || unit.sample_ids.length === 0) {
      throw new Error(`422: cannot expand ${path}`);
    }
    unit.child = synthesizeChild(unit);
    this.revision += 1;
    return { revision: this.revision, changed_paths: [path] };
  }
}

export function synthesizeChild(unit: UnitNode): MapNode {
  const path = unitPath(unit.label);
  const ids = unit.sample_ids;
  const chunk = Math.ceil(ids.length / 4) || 1;
  const units: UnitNode[] = [];
  for (let i = 0; i < 4; i++) {
    const row = Math.floor(i / 2);
    const col = i % 2;
    const mine = ids.slice(i * chunk, (i + 1) * chunk);
    units.push({
      row,
      col,
      label: `${path}[${col}${row}]:${mine.length}`,
      weight: unit.weight.map((w) => w * (0.8 + 0.1 * i)),
      qe: unit.qe / 4,
      sample_ids: mine,
      child: null,
    });
  }
  return { path, rows: 2, cols: 2, units };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
