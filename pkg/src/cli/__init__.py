"""Command-line subcommands, cohort expressions and plots"""
