/** Top control bar: scenario length, real-time mode, start/stop, save/load. */

import type { Actions } from "./actions";
import type { Store, ViewState } from "./store";

export class ControlBar {
  lastError = "";

  constructor(private root: HTMLElement, private store: Store, private actions: Actions) {}

  showError(message: string): void {
    this.lastError = message;
    this.render(this.store.state);
  }

  render(state: ViewState): void {
    const root = this.root;
    root.innerHTML = "";
    const params = state.scenario?.params;
    const running = state.runStatus !== "idle";

    const endLabel = document.createElement("label");
    endLabel.textContent = "end time ";
    const end = document.createElement("input");
    end.type = "number";
    end.min = "1";
    end.value = String(params?.end_time ?? 3600);
    end.disabled = running || !params;
    end.addEventListener("change", () => {
      const value = Math.max(1, Math.round(Number(end.value) || 1));
      void this.actions.setParams({ end_time: value });
    });
    endLabel.appendChild(end);
    endLabel.appendChild(document.createTextNode(" s"));
    root.appendChild(endLabel);

    const rtLabel = document.createElement("label");
    const rt = document.createElement("input");
    rt.type = "checkbox";
    rt.checked = params?.real_time_factor != null;
    rt.disabled = running || !params;
    rtLabel.appendChild(rt);
    rtLabel.appendChild(document.createTextNode(" real time ×"));
    const factor = document.createElement("input");
    factor.type = "number";
    factor.step = "0.1";
    factor.min = "0.001";
    factor.value = String(params?.real_time_factor ?? 1.0);
    factor.disabled = running || !rt.checked;
    const commitRt = () => {
      const value = rt.checked ? Math.max(0.001, Number(factor.value) || 1.0) : null;
      void this.actions.setParams({ real_time_factor: value });
    };
    rt.addEventListener("change", commitRt);
    factor.addEventListener("change", commitRt);
    rtLabel.appendChild(factor);
    root.appendChild(rtLabel);

    const startStop = document.createElement("button");
    startStop.className = running ? "stop" : "start";
    startStop.textContent = running ? "■ Stop" : "▶ Start";
    startStop.disabled = state.runStatus === "stopping" || !state.scenario;
    startStop.addEventListener("click", () => {
      if (running) void this.actions.stopRun();
      else void this.actions.startRun();
    });
    root.appendChild(startStop);

    const pathInput = document.createElement("input");
    pathInput.type = "text";
    pathInput.placeholder = "scenario path";
    pathInput.className = "path-input";
    pathInput.value = this.pathValue;
    pathInput.addEventListener("change", () => (this.pathValue = pathInput.value));
    root.appendChild(pathInput);

    const save = document.createElement("button");
    save.textContent = "Save";
    save.addEventListener("click", () =>
      void this.actions.saveScenario(this.pathValue || undefined));
    root.appendChild(save);

    const load = document.createElement("button");
    load.textContent = "Open";
    load.disabled = running || !this.pathValue;
    load.addEventListener("click", () => void this.actions.loadScenario(this.pathValue));
    root.appendChild(load);

    if (this.lastError) {
      const toast = document.createElement("span");
      toast.className = "toast";
      toast.textContent = this.lastError;
      toast.addEventListener("click", () => {
        this.lastError = "";
        this.render(this.store.state);
      });
      root.appendChild(toast);
    }
  }

  private pathValue = "";
}
