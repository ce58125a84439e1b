"""The module contains the diagrams written next to the comparison tables
    - aggregator comparison diagram
    - token-count ablation diagram
"""
import matplotlib
import seaborn
from matplotlib import pyplot as plt
import matplotlib.patches as mpl_patch

matplotlib.use("Agg")


def make_comparison_diagram(table, title, position, metric="test_auc"):
    """Bar chart of the mean AUC of every row of a comparison table, one colour per task,
    with the seed standard deviation as error bar.

    Args:
        table (DataFrame): Comparison rows with label, task, <metric>_mean and <metric>_sd.
        title (str): Title of the diagram.
        position (str or Path): The PNG file to write.
        metric (str): validation_auc or test_auc.
    """
    figure, axes = plt.subplots(figsize=(max(8, 1.2 * table["label"].nunique() + 4), 8))
    figure.suptitle(title, fontsize=20, weight="bold")
    labels = list(dict.fromkeys(table["label"]))
    tasks = list(dict.fromkeys(table["task"]))
    seaborn.barplot(x="label", y=metric + "_mean", hue="task", data=table, order=labels,
                    hue_order=tasks, palette=["firebrick", "cornflowerblue"][:len(tasks)],
                    ax=axes)

    # Dodged bars share the default 0.8 category width
    width = 0.8 / len(tasks)
    for task_index, task in enumerate(tasks):
        rows = table[table["task"] == task].set_index("label")
        for label_index, label in enumerate(labels):
            if label not in rows.index:
                continue
            center = label_index - 0.4 + (task_index + 0.5) * width
            mean, sd = rows.at[label, metric + "_mean"], rows.at[label, metric + "_sd"]
            axes.errorbar(center, mean, yerr=sd, color="black", capsize=8, linewidth=2)
            axes.text(center, mean / 3, format(mean, ".3f"), ha="center", va="bottom",
                      weight="bold", fontsize=12, color="white", rotation=90)

    seeds = mpl_patch.Patch(label="Seeds per bar: " + str(int(table["seeds"].max())),
                            color="orange")
    handles, _ = axes.get_legend_handles_labels()
    axes.legend(handles=handles + [seeds], loc="upper left", fontsize=12)
    axes.set_ylim([0.4, 1.05])
    axes.set_xlabel("")
    axes.set_ylabel(metric.replace("_", " ").upper(), fontsize=14)
    axes.tick_params(axis="x", labelsize=12, rotation=30)

    plt.savefig(position, format="png", dpi=150, bbox_inches="tight")
    plt.close(figure)


def make_token_count_diagram(table, title, position, metric="test_auc"):
    """Mean AUC against the token count, one line per (aggregator, pooling) and task.

    Args:
        table (DataFrame): Ablation rows with aggregator, pooling, n_tokens, task and
            <metric>_mean.
        title (str): Title of the diagram.
        position (str or Path): The PNG file to write.
        metric (str): validation_auc or test_auc.
    """
    table = table.assign(series=table["aggregator"] + " / " + table["pooling"])
    figure = plt.figure(figsize=(12, 8))
    plt.title(title, pad=20, fontsize=20, weight="bold")
    seaborn.lineplot(x="n_tokens", y=metric + "_mean", hue="series", style="task",
                     markers=True, markersize=12, data=table)
    plt.xscale("log", base=2)
    plt.xticks(sorted(table["n_tokens"].unique()), [str(value) for value in
                                                    sorted(table["n_tokens"].unique())])
    plt.xlabel("number of tokens", fontsize=14)
    plt.ylabel(metric.replace("_", " ").upper(), fontsize=14)
    plt.savefig(position, format="png", dpi=150, bbox_inches="tight")
    plt.close(figure)
