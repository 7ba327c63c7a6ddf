from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compare B_n K f with K f on a dense grid of the unit box and report the sup error'
    service_method = 'approximate'
