// What-if flow: the store swaps to the server's returned report (hash and
// all), the diff shows old-vs-new accuracy and the root-split change, the
// config hash matches what the CLI reproduces, and invalid deltas highlight
// the offending entry.

import { describe, expect, it } from "vitest";

import { ApiError, type WhatIfOutcome } from "../src/api.js";
import { Store, type ReportApi } from "../src/state.js";
import { renderWhatIfDiff, renderWhatIfPanel } from "../src/render/whatIfPanel.js";
import type { Report, WhatIfDelta } from "../src/types.js";

import metaFixture from "./fixtures/meta.json";
import reportFixture from "./fixtures/report.json";
import whatifFixture from "./fixtures/whatif_exclude_root.json";

const report = reportFixture as unknown as Report;
const whatif = whatifFixture as unknown as Report;
const meta = metaFixture as { excluded_root_feature: string };

function fakeApi(overrides: Partial<ReportApi> = {}): ReportApi {
  return {
    fetchReport: async () => report,
    postWhatIf: async () => ({ kind: "report", report: whatif }),
    fetchWhatIfStatus: async () => ({ kind: "report", report: whatif }),
    ...overrides,
  };
}

describe("what-if flow", () => {
  it("swaps to the returned report and exposes exactly its config hash", async () => {
    const store = new Store(fakeApi());
    await store.load();
    expect(store.configHash).toBe(report.config_hash);
    store.setDelta({
      excluded_features: [meta.excluded_root_feature], merges: [], k: null,
    });
    const applied = await store.submitWhatIf();
    expect(applied).toBe(true);
    expect(store.configHash).toBe(whatif.config_hash);
    expect(store.current.previous?.config_hash).toBe(report.config_hash);
  });

  it("config hash round-trips: the UI hash equals the CLI whatif report hash", () => {
    // fixtures/whatif_exclude_root.json is byte-identical to the report the
    // CLI produces for the same delta (asserted when fixtures are generated:
    // scripts/make_ui_fixtures.py), so showing its config_hash means a
    // copy-paste into the CLI reproduces this exact view
    expect(whatif.config_hash).not.toBe(report.config_hash);
    expect(whatif.spec.tree.excluded_features).toContain(meta.excluded_root_feature);
  });

  it("diff panel shows old vs new accuracy and the root-split change", async () => {
    const store = new Store(fakeApi());
    await store.load();
    store.setDelta({
      excluded_features: [meta.excluded_root_feature], merges: [], k: null,
    });
    await store.submitWhatIf();
    const diff = renderWhatIfDiff(
      document, store.current.previous!, store.current.report!,
    );
    const accuracyCells = diff.querySelectorAll<HTMLElement>(".diff-accuracy td");
    expect(Number(accuracyCells[1].dataset.value)).toBe(
      report.generic.cv.mean_accuracy,
    );
    expect(Number(accuracyCells[2].dataset.value)).toBe(
      whatif.generic.cv.mean_accuracy,
    );
    const prevRoot = diff.querySelector(".diff-root-previous")!.textContent;
    const curRoot = diff.querySelector(".diff-root-current")!.textContent;
    expect(prevRoot).toBe(meta.excluded_root_feature);
    expect(curRoot).not.toBe(meta.excluded_root_feature);
    const whatifRoot = whatif.generic.tree.root;
    expect(curRoot).toBe(whatifRoot.kind === "split" ? whatifRoot.feature : "(single leaf)");
  });

  it("a 4xx response highlights the invalid delta entry", async () => {
    const store = new Store(fakeApi({
      postWhatIf: async () => {
        throw new ApiError(400, "unknown feature 'bogus_feature' in delta");
      },
    }));
    await store.load();
    const delta: WhatIfDelta = {
      excluded_features: ["bogus_feature"], merges: [], k: null,
    };
    store.setDelta(delta);
    const applied = await store.submitWhatIf();
    expect(applied).toBe(false);
    expect(store.configHash).toBe(report.config_hash); // no swap
    const panel = renderWhatIfPanel(document, store.current.pendingDelta, {
      features: report.generic.tree.feature_names,
      inFlight: store.current.inFlight,
      invalidDetail: store.current.invalidDetail,
    });
    const chip = panel.querySelector<HTMLElement>(".chip-exclude")!;
    expect(chip.dataset.feature).toBe("bogus_feature");
    expect(chip.classList.contains("chip-invalid")).toBe(true);
    expect(panel.querySelector(".delta-invalid")!.textContent).toContain(
      "bogus_feature",
    );
  });

  it("an empty delta does not hit the server", async () => {
    let posts = 0;
    const store = new Store(fakeApi({
      postWhatIf: async () => { posts += 1; return { kind: "report", report: whatif }; },
    }));
    await store.load();
    const applied = await store.submitWhatIf();
    expect(applied).toBe(false);
    expect(posts).toBe(0);
    expect(store.configHash).toBe(report.config_hash);
  });

  it("waits through 202 pending responses before swapping", async () => {
    let polls = 0;
    const store = new Store(fakeApi({
      postWhatIf: async (): Promise<WhatIfOutcome> => (
        { kind: "pending", configHash: whatif.config_hash }
      ),
      fetchWhatIfStatus: async (): Promise<WhatIfOutcome> => {
        polls += 1;
        return polls < 2
          ? { kind: "pending", configHash: whatif.config_hash }
          : { kind: "report", report: whatif };
      },
    }));
    await store.load();
    store.setDelta({
      excluded_features: [meta.excluded_root_feature], merges: [], k: null,
    });
    const applied = await store.submitWhatIf();
    expect(applied).toBe(true);
    expect(polls).toBe(2);
    expect(store.configHash).toBe(whatif.config_hash);
  });
});
