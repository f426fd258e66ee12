export const DAMAGE_LABELS = ["D00", "D10", "D20", "D40"] as const;
export type DamageLabel = (typeof DAMAGE_LABELS)[number];

export type VerdictStatus = "confirmed" | "rejected" | "relabeled";

export interface NetworkFeature {
  type: "Feature";
  geometry: { type: "LineString"; coordinates: [number, number][] };
  properties: {
    edge_id: number;
    severity: number;
    damage_count: number;
    class_counts: Record<string, number>;
    name: string | null;
  };
}

export interface NetworkDoc {
  type: "FeatureCollection";
  features: NetworkFeature[];
}

export interface DamagePoint {
  damage_id: string;
  label: string;
  score: number;
  bbox: [number, number, number, number];
  lat: number;
  lon: number;
  image_id: string;
  edge_id: number | null;
  verdict: string | null;
}

export interface PlanStep {
  edge_id: number;
  action: "maintain" | "traverse";
}

export interface PlanDoc {
  path: PlanStep[];
  total_cost: number;
  total_time_s: number;
  exact: boolean;
}

export interface VerdictBody {
  status: VerdictStatus;
  corrected_label?: DamageLabel;
  author: string;
}

export interface PlanParams {
  T: number;
  root: number;
  returnToRoot: boolean;
}
