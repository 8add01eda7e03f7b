// Running-metrics panel model from the latest MetricsReport.

import type { MetricsReport } from "./protocol.js";

export interface MetricsView {
  counts: string;
  sa: string;
  far: string;
  sr: string;
  avgTime: string;
  tasksDone: number;
  final: boolean;
}

function pct(v: number | null): string {
  return v === null ? "–" : `${v.toFixed(1)}%`;
}

export function toMetricsView(report: MetricsReport | null): MetricsView {
  if (!report) {
    return {
      counts: "TP 0 · FP 0 · FN 0",
      sa: "–",
      far: "–",
      sr: "–",
      avgTime: "–",
      tasksDone: 0,
      final: false,
    };
  }
  return {
    counts: `TP ${report.tp} · FP ${report.fp} · FN ${report.fn}`,
    sa: pct(report.sa),
    far: pct(report.far),
    sr: pct(report.sr),
    avgTime: report.avg_time_s === null ? "–" : `${report.avg_time_s.toFixed(1)} s`,
    tasksDone: report.task_log.length,
    final: report.final,
  };
}
