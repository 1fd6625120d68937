"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
Report-producing commands write delimited output plus a rendered figure,
and every command that consumes a run config persists the fully resolved
config next to its outputs.
"""
from __future__ import annotations

import sys

import click

from . import linker, pairgen, plots, synth
from .config import RunConfig, apply_overrides, load_config
from .encoder import init_model, load_checkpoint, save_checkpoint
from .errors import SynalignError
from .losses import LOSS_KINDS
from .ontology import load_dictionary, load_mentions, write_dictionary, write_mentions
from .trainer import OptimizerState
from .trainer import finetune as run_finetune
from .trainer import pretrain as run_pretrain


def _resolve_config(config_path, seed, overrides) -> RunConfig:
    config = load_config(config_path) if config_path else RunConfig()
    if seed is not None:
        config.set_key("seed", str(seed))
    apply_overrides(config, tuple(overrides))
    return config


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None, help="Flat key=value config file.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the run seed.")(fn)
    fn = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override any config key; repeatable.")(fn)
    return fn


@click.group()
def cli() -> None:
    """Self-alignment metric learning over synonym dictionaries."""


@cli.command("prepare-pairs")
@click.argument("dict_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--cap", type=int, default=None, help="Per-concept pair cap (default from config).")
@_common_options
def cmd_prepare_pairs(dict_path, out_path, cap, config_path, seed, overrides) -> None:
    """Generate the offline positive-pair list from a dictionary TSV."""
    config = _resolve_config(config_path, seed, overrides)
    if cap is not None:
        config.set_key("pair_cap", str(cap))
    ontology = load_dictionary(dict_path)
    pairs = pairgen.generate_pairs(ontology, cap=config.pair_cap, seed=config.seed)
    pairgen.write_pairs(pairs, out_path)
    config.write_resolved(out_path + ".config")
    click.echo(f"wrote {len(pairs)} pairs to {out_path}")


def _train_outputs(config, model, log, out_path, make_plot, state) -> None:
    save_checkpoint(model, out_path, optimizer_state=state)
    log.write_csv(out_path + ".log.csv")
    config.write_resolved(out_path + ".config")
    if make_plot:
        plots.save_loss_curve(log, out_path + ".loss.png")


@cli.command("pretrain")
@click.argument("pairs_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
@_common_options
def cmd_pretrain(pairs_path, out_path, plot, config_path, seed, overrides) -> None:
    """Self-alignment pretraining on a positive-pair list."""
    config = _resolve_config(config_path, seed, overrides)
    pairs = pairgen.read_pairs(pairs_path, seed=config.seed)
    model = init_model(config.encoder_config())
    state = OptimizerState.zeros_like(model)
    trained, log = run_pretrain(pairs, model, config.train_config(), state=state)
    _train_outputs(config, trained, log, out_path, plot, state)
    click.echo(f"trained {len(log.records)} iterations; checkpoint at {out_path}")


@cli.command("finetune")
@click.argument("mentions_path", type=click.Path())
@click.argument("dict_path", type=click.Path())
@click.option("--checkpoint", "checkpoint_in", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--plot/--no-plot", default=True, show_default=True)
@_common_options
def cmd_finetune(mentions_path, dict_path, checkpoint_in, out_path, plot, config_path, seed, overrides) -> None:
    """Fine-tune a pretrained checkpoint on mention/gold-synonym pairs."""
    config = _resolve_config(config_path, seed, overrides)
    if "epochs" not in config.explicit:
        config.set_key("epochs", "3")
    mentions = load_mentions(mentions_path)
    ontology = load_dictionary(dict_path)
    model = load_checkpoint(checkpoint_in)
    trained, log = run_finetune(mentions, ontology, model, config.train_config())
    _train_outputs(config, trained, log, out_path, plot, None)
    click.echo(f"fine-tuned {len(log.records)} iterations; checkpoint at {out_path}")


@cli.command("evaluate")
@click.argument("checkpoint", type=click.Path())
@click.argument("dict_path", type=click.Path())
@click.argument("mentions_path", type=click.Path())
@click.option("--ks", default="1,5", show_default=True, help="Comma-separated cut-offs.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the report JSON here.")
@click.option("--plot/--no-plot", default=True, show_default=True)
def cmd_evaluate(checkpoint, dict_path, mentions_path, ks, out_path, plot) -> None:
    """Link every mention against the dictionary and report acc@k."""
    k_list = [int(part) for part in ks.split(",") if part.strip()]
    model = load_checkpoint(checkpoint)
    ontology = load_dictionary(dict_path)
    mentions = load_mentions(mentions_path)
    index = linker.build_index(model, ontology)
    report = linker.evaluate(index, mentions, model, k_list)
    click.echo(" ".join(f"acc@{k}={report.accuracy[k]!r}" for k in sorted(report.accuracy)))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        if plot:
            plots.save_accuracy_bars(report, out_path + ".png")


@cli.command("query")
@click.argument("checkpoint", type=click.Path())
@click.argument("dict_path", type=click.Path())
@click.argument("mention")
@click.option("-k", "k", type=int, default=5, show_default=True)
def cmd_query(checkpoint, dict_path, mention, k) -> None:
    """Print the k nearest dictionary names for one mention."""
    model = load_checkpoint(checkpoint)
    ontology = load_dictionary(dict_path)
    index = linker.build_index(model, ontology)
    prediction = linker.topk(index, mention, model, k)
    for rank, entry in enumerate(prediction.ranked, start=1):
        click.echo(f"{rank}\t{entry.cui}\t{entry.name}\t{entry.similarity:.17g}")


@cli.command("embed")
@click.argument("checkpoint", type=click.Path())
@click.argument("dict_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), required=True)
def cmd_embed(checkpoint, dict_path, out_path) -> None:
    """Export all dictionary-name embeddings as TSV."""
    model = load_checkpoint(checkpoint)
    ontology = load_dictionary(dict_path)
    index = linker.build_index(model, ontology)
    linker.export_embeddings(index, out_path)
    click.echo(f"wrote {len(index)} embeddings to {out_path}")


@cli.command("synth")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--n-concepts", type=int, default=200, show_default=True)
@click.option("--synonyms-per-concept", type=int, default=6, show_default=True)
@click.option("--edit-ops", type=int, default=3, show_default=True)
@click.option("--holdout-per-concept", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_synth(out_dir, n_concepts, synonyms_per_concept, edit_ops, holdout_per_concept, seed) -> None:
    """Generate a synthetic dictionary plus train/test mention sets."""
    import os

    spec = synth.SyntheticSpec(
        n_concepts=n_concepts,
        synonyms_per_concept=synonyms_per_concept,
        edit_ops=edit_ops,
        holdout_per_concept=holdout_per_concept,
        seed=seed,
    )
    data = synth.generate(spec)
    os.makedirs(out_dir, exist_ok=True)
    write_dictionary(data.dictionary, os.path.join(out_dir, "dict.tsv"))
    write_mentions(data.train_mentions, os.path.join(out_dir, "train_mentions.tsv"))
    write_mentions(data.test_mentions, os.path.join(out_dir, "test_mentions.tsv"))
    click.echo(
        f"wrote {len(data.dictionary)} dictionary names, "
        f"{len(data.train_mentions)} train and {len(data.test_mentions)} test mentions to {out_dir}"
    )


@cli.command("loss-compare")
@click.argument("pairs_path", type=click.Path())
@click.argument("dict_path", type=click.Path())
@click.argument("mentions_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the table here.")
@click.option("--plot/--no-plot", default=True, show_default=True)
@_common_options
def cmd_losscompare(pairs_path, dict_path, mentions_path, out_path, plot, config_path, seed, overrides) -> None:
    """Train one model per objective on shared data and compare acc@k."""
    config = _resolve_config(config_path, seed, overrides)
    pairs = pairgen.read_pairs(pairs_path, seed=config.seed)
    ontology = load_dictionary(dict_path)
    mentions = load_mentions(mentions_path)
    rows = []
    for kind in LOSS_KINDS:
        config.loss = kind
        model = init_model(config.encoder_config())
        trained, log = run_pretrain(pairs, model, config.train_config())
        index = linker.build_index(trained, ontology)
        report = linker.evaluate(index, mentions, trained, [1, 5])
        rows.append((kind, log.records[-1].loss, report.acc_at_1, report.acc_at_5))
    lines = [
        f"# seed={config.seed} pairs={pairs_path} dict={dict_path} mentions={mentions_path}",
        "loss\tfinal_loss\tacc@1\tacc@5",
    ]
    lines += [f"{kind}\t{final!r}\t{a1!r}\t{a5!r}" for kind, final, a1, a5 in rows]
    text = "\n".join(lines)
    click.echo(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        config.write_resolved(out_path + ".config")
        if plot:
            plots.save_loss_compare_chart(rows, out_path + ".png")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:  # --help and friends
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        return 1
    except click.ClickException as exc:
        click.echo(exc.format_message(), err=True)
        return 1
    except SynalignError as exc:
        click.echo(str(exc), err=True)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        click.echo(str(exc), err=True)
        return 2
    except ValueError as exc:
        click.echo(str(exc), err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
